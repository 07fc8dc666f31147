#ifndef RONSFP_FP_OPERATOR_HPP
#define RONSFP_FP_OPERATOR_HPP

#include "ronsfp/gausspoly.hpp"
#include "ronsfp/mixture.hpp"

#include <span>
#include <vector>

namespace ronsfp {

/// Scalar coefficient that may depend on time. Covers everything the
/// benchmark drifts need without a general expression tree.
struct CoeffFn {
    enum class Kind { constant, affine, sinusoid };

    Kind kind = Kind::constant;
    double p0 = 0.0, p1 = 0.0, p2 = 0.0;

    double operator()(double t) const;

    static CoeffFn constant(double c) { return {Kind::constant, c, 0.0, 0.0}; }
    /// p0 + p1 * t
    static CoeffFn affine(double c0, double c1) { return {Kind::affine, c0, c1, 0.0}; }
    /// p0 * (sin(p1 * t) + p2)
    static CoeffFn sinusoid(double amp, double omega, double offset) {
        return {Kind::sinusoid, amp, omega, offset};
    }
};

struct DriftTerm {
    ExpVec exps{};
    CoeffFn coeff;
};

/// Ito drift F(x, t) with polynomial components, plus constant diffusion.
/// nu = sigma^2 / 2 is the reference diffusion; axis_diffusion scales it per
/// axis (all ones = isotropic), so degenerate noise such as velocity-only
/// forcing stays representable.
struct DriftModel {
    int dim = 0;
    double nu = 0.0;
    std::vector<double> axis_diffusion;          // dim entries, multiplies nu
    std::vector<std::vector<DriftTerm>> components; // dim polynomial components

    void validate() const;
    int max_degree() const;
    /// Numeric polynomial components at time t.
    std::vector<Poly> components_at(double t) const;
    /// Drift vector at (x, t).
    void evaluate(std::span<const double> x, double t, std::span<double> out) const;
    /// Per-axis nu.
    double nu_axis(int axis) const { return nu * axis_diffusion[axis]; }
    /// Per-axis sigma of the underlying SDE.
    double sigma_axis(int axis) const;
};

/// Fokker-Planck right-hand side applied to the mixture density:
///
///   L p = -sum_l d/dx_l (F_l p) + sum_l nu_l d^2 p / dx_l^2
///
/// Every contribution of a mixture term shares that term's Gaussian, so the
/// result has exactly one GaussPoly per mixture term after merging.
GaussPolySum apply_fp_operator(const DriftModel& drift, const MixtureState& state, double t);

/// Pointwise residual of the parameter flow:
///   R(x) = sum_j dp/dtheta_j * thetadot_j - (L p)(x).
double residual(const DriftModel& drift, const MixtureState& state,
                std::span<const double> thetadot, double t, std::span<const double> x);

} // namespace ronsfp

#endif
