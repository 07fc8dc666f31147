#ifndef RONSFP_RUNNER_HPP
#define RONSFP_RUNNER_HPP

#include "ronsfp/config.hpp"

#include <limits>
#include <string>
#include <vector>

namespace ronsfp {

struct RunSummary {
    std::string out_dir;
    double final_time = 0.0;
    bool equilibrium_detected = false;
    double equilibrium_time = 0.0;
    double max_drift_pre = 0.0;  // largest |I - 1| seen before any rescale
    double max_drift_post = 0.0; // largest |I - 1| among recorded states
    int renormalizations = 0;
    std::size_t steps_accepted = 0;
    std::size_t steps_rejected = 0;
    std::size_t rhs_evals = 0;
    double assembly_seconds = 0.0;
    double solve_seconds = 0.0;
    double integrate_seconds = 0.0;
    double ensemble_seconds = 0.0;
    double total_seconds = 0.0;
    /// Headline accuracy number: max relative parameter error against the
    /// closed form (ou), equilibrium L2 relative error (bistable, duffing),
    /// max mean relative error against the moment ODEs (harmonic-trap).
    double primary_error = std::numeric_limits<double>::quiet_NaN();
    /// Max covariance relative error against the moment ODEs (harmonic-trap).
    double covariance_error = std::numeric_limits<double>::quiet_NaN();
    /// Largest |moment difference| / standard error against the particle
    /// ensemble, when one was run.
    double max_ensemble_z = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> final_centers; // term-major
};

/// Executes the configured solve (and optional particle ensemble), writing
/// trajectory.csv, moments.csv, conservation.csv, slice_<k>.csv,
/// ensemble_moments.csv and report.json into cfg.out_dir.
RunSummary run_config(const RunConfig& cfg);

/// Comparison report between two run directories: aligns their moment
/// checkpoints (the second directory's ensemble_moments.csv when present,
/// else its moments.csv) and reports per-checkpoint differences, with
/// standard-error ratios when the reference carries them. Returns JSON text.
/// Throws std::runtime_error when the time grids cannot be aligned.
std::string compare_outputs(const std::string& dir_a, const std::string& dir_b);

} // namespace ronsfp

#endif
