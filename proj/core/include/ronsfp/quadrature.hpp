#ifndef RONSFP_QUADRATURE_HPP
#define RONSFP_QUADRATURE_HPP

#include <functional>
#include <span>
#include <vector>

namespace ronsfp {

/// Adaptive Gauss-Kronrod integral of f over [a, b].
double integrate_1d(const std::function<double(double)>& f, double a, double b,
                    double rel_tol = 1e-12);

/// Iterated adaptive integral over an axis-aligned box, dimensions 1 to 3.
/// lo/hi hold one bound per axis.
double integrate_box(const std::function<double(std::span<const double>)>& f,
                     std::span<const double> lo, std::span<const double> hi,
                     double rel_tol = 1e-10);

struct GaussHermiteRule {
    std::vector<double> nodes;   // roots t_k of the physicists' Hermite polynomial
    std::vector<double> weights; // sum w_k g(t_k) ~ int g(t) exp(-t^2) dt
};

/// Golub-Welsch nodes and weights for the exp(-t^2) weight.
GaussHermiteRule gauss_hermite(int n);

} // namespace ronsfp

#endif
