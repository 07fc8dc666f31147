#ifndef RONSFP_INTEGRATOR_HPP
#define RONSFP_INTEGRATOR_HPP

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

namespace ronsfp {

struct TimeGrid {
    double t0 = 0.0;
    double t_end = 1.0;
    double h0 = 1e-4;   // initial step (the step, in fixed-step mode)
    double rtol = 1e-6;
    double atol = 1e-9;
    std::size_t max_steps = 5'000'000;
};

struct EquilibriumStop {
    bool enabled = false;
    double threshold = 1e-5; // on |thetadot| / |theta|
    double window = 1.0;     // the rate must stay below threshold this long
};

/// Explicit Dormand-Prince 5(4) suits the L2 flows; the weighted collocation
/// flow carries fast tail-relaxation modes several orders above the bulk
/// dynamics, where an explicit stepper becomes stability-limited and an
/// L-stable linearly implicit one keeps the step set by accuracy alone.
enum class Stepper { dp5, rosenbrock };

struct IntegrateOptions {
    /// Spacing of recorded states; 0 records every accepted step. Steps are
    /// clamped to land on output times exactly, so comparisons against
    /// references need no interpolation.
    double output_dt = 0.0;
    EquilibriumStop equilibrium;
    Stepper stepper = Stepper::dp5;
    bool fixed_step = false; // disable adaptivity (convergence studies)
    /// Amplitudes are rescaled when |I - 1| exceeds this at an accepted step.
    double renormalize_tol = 1e-10;
    /// Hard conservation failure threshold.
    double conservation_fail = 1e-6;
    bool renormalize = true;
};

struct StepRecord {
    double t = 0.0;
    Eigen::VectorXd theta;
    double total_prob = 1.0;
    double rate = 0.0; // |thetadot| / max(|theta|, eps)
    double cond_estimate = 1.0;
};

struct Trajectory {
    std::vector<StepRecord> records;
    std::size_t steps_accepted = 0;
    std::size_t steps_rejected = 0;
    std::size_t rhs_evals = 0;
    int renormalizations = 0;
    double max_drift_pre = 0.0;  // largest |I - 1| seen before rescaling
    double max_drift_post = 0.0; // largest |I - 1| among recorded states
    bool equilibrium_detected = false;
    double equilibrium_time = 0.0;

    double final_time() const { return records.back().t; }
    const Eigen::VectorXd& final_theta() const { return records.back().theta; }
};

/// Right-hand side contract: write thetadot into `out` and return true, or
/// return false when the state is not usable (the stepper then retries with
/// a smaller step). May report a conditioning estimate.
using OdeRhs = std::function<bool(double t, const Eigen::VectorXd& theta,
                                  Eigen::VectorXd& out, double* cond_estimate)>;

/// Adaptive integration with the stepper chosen in the options: explicit
/// Dormand-Prince 5(4) with FSAL, or a linearly implicit Rosenbrock 2(3)
/// pair with finite-difference Jacobians for stiff flows. `dim` is the
/// spatial dimension of the mixture encoded in theta (needed for the
/// conservation monitor). Throws StiffnessError, WidthCollapseError,
/// ConservationError or SolverError; see errors.hpp.
Trajectory integrate(const OdeRhs& rhs, int dim, const Eigen::VectorXd& theta0,
                     const TimeGrid& grid, const IntegrateOptions& opts = {});

/// First time at which the rate stays below threshold for a full window,
/// reported at the window's end; nullopt when the trajectory never settles.
std::optional<double> detect_equilibrium(const Trajectory& traj, double threshold,
                                         double window);

} // namespace ronsfp

#endif
