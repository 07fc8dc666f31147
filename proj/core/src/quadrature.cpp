#include "ronsfp/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ronsfp {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
constexpr int kMaxDepth = 15;

} // namespace

double integrate_1d(const std::function<double(double)>& f, double a, double b,
                    double rel_tol) {
    return GK::integrate(f, a, b, kMaxDepth, rel_tol);
}

double integrate_box(const std::function<double(std::span<const double>)>& f,
                     std::span<const double> lo, std::span<const double> hi,
                     double rel_tol) {
    const int d = static_cast<int>(lo.size());
    if (static_cast<int>(hi.size()) != d) {
        throw std::invalid_argument("box bounds dimension mismatch");
    }
    switch (d) {
    case 1:
        return GK::integrate([&](double x) { return f(std::span<const double>(&x, 1)); },
                             lo[0], hi[0], kMaxDepth, rel_tol);
    case 2:
        return GK::integrate(
            [&](double x) {
                return GK::integrate(
                    [&](double y) {
                        const double pt[2] = {x, y};
                        return f(std::span<const double>(pt, 2));
                    },
                    lo[1], hi[1], kMaxDepth, rel_tol);
            },
            lo[0], hi[0], kMaxDepth, rel_tol);
    case 3:
        return GK::integrate(
            [&](double x) {
                return GK::integrate(
                    [&](double y) {
                        return GK::integrate(
                            [&](double z) {
                                const double pt[3] = {x, y, z};
                                return f(std::span<const double>(pt, 3));
                            },
                            lo[2], hi[2], kMaxDepth, rel_tol);
                    },
                    lo[1], hi[1], kMaxDepth, rel_tol);
            },
            lo[0], hi[0], kMaxDepth, rel_tol);
    default:
        throw std::invalid_argument("integrate_box supports dimensions 1 to 3");
    }
}

GaussHermiteRule gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite needs n >= 1");
    // Jacobi matrix of the Hermite recurrence: off-diagonal sqrt(k/2).
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = std::sqrt(0.5 * k);
        J(k, k - 1) = b;
        J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double mu0 = std::sqrt(std::numbers::pi); // int exp(-t^2) dt
    for (int k = 0; k < n; ++k) {
        rule.nodes[k] = es.eigenvalues()(k);
        const double v0 = es.eigenvectors()(0, k);
        rule.weights[k] = mu0 * v0 * v0;
    }
    return rule;
}

} // namespace ronsfp
