#ifndef RONSFP_PROJECTION_HPP
#define RONSFP_PROJECTION_HPP

#include "ronsfp/assembler.hpp"
#include "ronsfp/mixture.hpp"

#include <cstdint>
#include <functional>
#include <span>

namespace ronsfp {

struct ProjectionOptions {
    int max_iterations = 200;
    /// Converged when one iteration improves the objective by less than
    /// this relative amount (or the objective hits zero).
    double tol = 1e-10;
    double width_floor = 1e-8;
    /// Points for the automatic grid when the HilbertChoice carries none;
    /// 0 picks max(512, 64 * n_params).
    std::size_t auto_points = 0;
    std::uint64_t grid_seed = 1234;
};

struct ProjectionReport {
    double objective = 0.0;          // weighted sum of squares at the returned state
    double objective_at_guess = 0.0; // same objective at the caller's guess
    int iterations = 0;
    std::size_t n_points = 0;
    bool grid_auto = false;
};

/// Finds the mixture closest to the target density p0 in the chosen norm,
/// then rescales amplitudes so the result integrates to one.
///
/// The minimization is a damped Gauss-Newton on the collocation
/// least-squares objective sum_k w_k (p(x_k; theta) - p0(x_k))^2. The
/// weights are 1 for the plain modes and 1 / max(p0(x_k), 1e-14) for
/// weighted_collocation. Since the target is only pointwise evaluable,
/// l2_symbolic also projects through collocation points; when the choice
/// carries no grid one is sampled from the guess with widths inflated 4x,
/// deterministically from grid_seed.
///
/// Exactly coincident guess terms make the Jacobian rank deficient, so they
/// receive a tiny deterministic center perturbation before the first
/// iteration.
///
/// Throws ProjectionError when max_iterations pass without convergence.
MixtureState project_initial_condition(
    const std::function<double(std::span<const double>)>& p0,
    const MixtureState& guess, const HilbertChoice& space,
    const ProjectionOptions& opts = {}, ProjectionReport* report = nullptr);

} // namespace ronsfp

#endif
