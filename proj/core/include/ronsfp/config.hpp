#ifndef RONSFP_CONFIG_HPP
#define RONSFP_CONFIG_HPP

#include "ronsfp/assembler.hpp"
#include "ronsfp/fp_operator.hpp"
#include "ronsfp/integrator.hpp"
#include "ronsfp/mixture.hpp"
#include "ronsfp/oracle.hpp"
#include "ronsfp/problems.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ronsfp {

/// Carries every schema violation found in one pass, so a malformed config
/// reports all its problems at once instead of one per invocation.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> issues)
        : std::runtime_error(join(issues)), issues_(std::move(issues)) {}
    const std::vector<std::string>& issues() const { return issues_; }

private:
    static std::string join(const std::vector<std::string>& issues);
    std::vector<std::string> issues_;
};

struct InitSpec {
    enum class Kind { explicit_terms, grouped, ou_exact, project };
    Kind kind = Kind::grouped;

    // explicit_terms
    std::vector<double> amp;
    std::vector<double> width;
    std::vector<double> center; // term-major

    // grouped (also the guess layout for project)
    double group_amp = 0.0;
    double group_width = 0.0;
    std::vector<problems::InitGroup> groups;
    double jitter = 1e-8;

    // ou_exact
    double t0 = 0.0;

    // project: isotropic Gaussian target
    std::vector<double> target_mean;
    double target_variance = 0.0;
};

struct CollocationSpec {
    std::string scheme = "equidistant"; // equidistant | random
    int n_points = 0;                   // random mode, or equidistant in 1D
    std::vector<int> counts;            // equidistant per-axis counts (d > 1)
    std::vector<double> lo, hi;
    std::uint64_t seed = 0;
};

struct SliceSpec {
    std::vector<double> times;
    std::vector<int> axes;      // 1 or 2 axes: 1D or 2D marginal
    std::vector<double> lo, hi; // per listed axis
    std::vector<int> counts;    // per listed axis
};

struct EnsembleConfig {
    bool enabled = false;
    EnsembleSpec spec;
    std::vector<double> times;
};

/// Problem-specific scalars kept for reporting and reference densities.
struct ProblemParams {
    double gamma = 0.0; // ou, harmonic-trap
    double sigma = 0.0; // ou, bistable, duffing
    double a1 = 0.0, a2 = 0.0, a3 = 0.0;              // duffing
    double force_amp = 0.0, force_omega = 0.0, force_offset = 0.0; // harmonic-trap
    double nu = 0.0;    // harmonic-trap, custom-polynomial
};

struct RunConfig {
    std::string problem; // ou | bistable | duffing | harmonic-trap | custom-polynomial
    DriftModel drift;
    ProblemParams params;
    int r = 1;
    InitSpec init;
    HilbertMode mode = HilbertMode::l2_symbolic;
    CollocationSpec colloc;
    double alpha = 1e-6;
    TimeGrid time;
    Stepper stepper = Stepper::dp5;
    double output_dt = 0.0;
    EquilibriumStop equilibrium;
    EnsembleConfig ensemble;
    SliceSpec slices;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    int threads = 1;
};

/// Parses and validates a JSON run configuration. Throws ConfigError listing
/// every violation found.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// Resolves the initialization spec into a concrete mixture with total
/// probability exactly 1 (projection runs here when requested).
MixtureState build_initial_state(const RunConfig& cfg);

/// Materializes the collocation grid (empty grid for the symbolic mode).
CollocationGrid build_collocation_grid(const RunConfig& cfg);

} // namespace ronsfp

#endif
