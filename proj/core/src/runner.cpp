#include "ronsfp/runner.hpp"

#include "ronsfp/integrator.hpp"
#include "ronsfp/io.hpp"
#include "ronsfp/oracle.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace ronsfp {

using nlohmann::json;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

MixtureState state_at(const StepRecord& rec, int dim) {
    return unflatten(dim, std::span<const double>(rec.theta.data(),
                                                  static_cast<std::size_t>(rec.theta.size())));
}

/// Marginal density of the mixture over the listed axes; the remaining axes
/// integrate out to (pi L^2)^((d-k)/2) per term.
double marginal_density(const MixtureState& state, std::span<const int> axes,
                        std::span<const double> coords) {
    const int d = state.dim;
    const int k = static_cast<int>(axes.size());
    double sum = 0.0;
    for (int i = 0; i < state.terms(); ++i) {
        const double L2 = state.width[i] * state.width[i];
        double q = 0.0;
        for (int a = 0; a < k; ++a) {
            const double diff = coords[a] - state.center[i * d + axes[a]];
            q += diff * diff;
        }
        sum += state.amp[i] * state.amp[i] *
               std::pow(std::numbers::pi * L2, 0.5 * (d - k)) * std::exp(-q / L2);
    }
    return sum;
}

/// Exact integral of the marginal over the box [lo, hi] (product of erf
/// differences per term).
double marginal_mass_box(const MixtureState& state, std::span<const int> axes,
                         std::span<const double> lo, std::span<const double> hi) {
    const int d = state.dim;
    const int k = static_cast<int>(axes.size());
    double mass = 0.0;
    for (int i = 0; i < state.terms(); ++i) {
        const double L = state.width[i];
        double v = state.amp[i] * state.amp[i] * std::pow(std::numbers::pi * L * L, 0.5 * (d - k));
        for (int a = 0; a < k; ++a) {
            const double c = state.center[i * d + axes[a]];
            v *= 0.5 * L * std::sqrt(std::numbers::pi) *
                 (std::erf((hi[a] - c) / L) - std::erf((lo[a] - c) / L));
        }
        mass += v;
    }
    return mass;
}

std::size_t nearest_record(const Trajectory& traj, double t) {
    std::size_t best = 0;
    double best_diff = std::abs(traj.records[0].t - t);
    for (std::size_t i = 1; i < traj.records.size(); ++i) {
        const double diff = std::abs(traj.records[i].t - t);
        if (diff < best_diff) {
            best_diff = diff;
            best = i;
        }
    }
    return best;
}

json ou_errors(const RunConfig& cfg, const Trajectory& traj, RunSummary& summary) {
    double worst = 0.0;
    for (const StepRecord& rec : traj.records) {
        const OuExact ex = ou_exact_params(cfg.params.gamma, cfg.params.sigma, rec.t);
        const MixtureState s = state_at(rec, 1);
        const double ampsq = s.amp[0] * s.amp[0];
        worst = std::max(worst, std::abs(ampsq - ex.amplitude) / ex.amplitude);
        worst = std::max(worst, std::abs(s.width[0] - ex.width) / ex.width);
        worst = std::max(worst, std::abs(s.center[0]) / ex.width);
    }
    summary.primary_error = worst;
    return json{{"max_parameter_relative_error", worst},
                {"checked_records", traj.records.size()}};
}

json equilibrium_errors(const RunConfig& cfg, const MixtureState& final_state,
                        RunSummary& summary) {
    EquilibriumRef ref = cfg.problem == "bistable"
                             ? EquilibriumRef::bistable(cfg.params.sigma)
                             : EquilibriumRef::duffing(cfg.params.a1, cfg.params.a2,
                                                       cfg.params.a3, cfg.params.sigma);
    std::vector<double> lo, hi;
    if (cfg.problem == "bistable") {
        lo = {-4.0};
        hi = {4.0};
    } else {
        lo = {-3.0, -3.0};
        hi = {3.0, 3.0};
    }
    const double err = l2_relative_error(
        [&](std::span<const double> x) { return evaluate(final_state, x); },
        [&](std::span<const double> x) { return ref.density(x); }, lo, hi, 1e-8);
    summary.primary_error = err;
    return json{{"equilibrium_l2_relative_error", err}};
}

json harmonic_errors(const RunConfig& cfg, const Trajectory& traj,
                     const MixtureState& init, RunSummary& summary) {
    if (std::abs(cfg.time.t0) > 0.0) {
        return json{{"note", "moment reference starts at t = 0; skipped"}};
    }
    const int d = cfg.drift.dim;
    std::vector<double> times;
    times.reserve(traj.records.size());
    for (const StepRecord& rec : traj.records) times.push_back(rec.t);

    const MixtureMoments m0 = mixture_moments(init);
    const MomentTrajectory ref = moment_ode_solve(
        d, CoeffFn::sinusoid(cfg.params.force_amp, cfg.params.force_omega,
                             cfg.params.force_offset),
        cfg.params.gamma, cfg.params.nu, m0.mean, m0.second, times, 1e-12);

    double mean_max = 0.0, cov_max = 0.0, cov_final = 0.0;
    for (std::size_t i = 0; i < traj.records.size(); ++i) {
        const MixtureMoments mm = mixture_moments(state_at(traj.records[i], d));
        const Eigen::MatrixXd ref_cov =
            ref.second[i] - ref.mean[i] * ref.mean[i].transpose();
        const double mean_rel =
            (mm.mean - ref.mean[i]).norm() / std::max(ref.mean[i].norm(), 1e-300);
        const double cov_rel =
            (mm.covariance - ref_cov).norm() / std::max(ref_cov.norm(), 1e-300);
        mean_max = std::max(mean_max, mean_rel);
        cov_max = std::max(cov_max, cov_rel);
        cov_final = cov_rel;
    }
    summary.primary_error = mean_max;
    summary.covariance_error = cov_max;
    return json{{"mean_relative_error_max", mean_max},
                {"covariance_relative_error_max", cov_max},
                {"covariance_relative_error_final", cov_final}};
}

struct Table {
    std::vector<std::string> cols;
    std::vector<std::vector<double>> rows;

    int col(const std::string& name) const {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (cols[i] == name) return static_cast<int>(i);
        }
        return -1;
    }
};

Table read_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty CSV " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.cols.push_back(cell);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream rs(line);
        while (std::getline(rs, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != t.cols.size()) {
            throw std::runtime_error("ragged CSV row in " + path.string());
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace

RunSummary run_config(const RunConfig& cfg) {
    const auto wall0 = clock_type::now();
    const int d = cfg.drift.dim;

    const MixtureState init = build_initial_state(cfg);
    const CollocationGrid grid = build_collocation_grid(cfg);

    RhsOptions ropts;
    ropts.alpha = cfg.alpha;
    ropts.space = HilbertChoice{cfg.mode, grid};
    ropts.threads = cfg.threads;
    RonsRhs rhs(cfg.drift, ropts);
    const OdeRhs fn = [&rhs](double t, const Eigen::VectorXd& theta, Eigen::VectorXd& out,
                             double* cond) { return rhs(t, theta, out, cond); };

    IntegrateOptions iopts;
    iopts.output_dt = cfg.output_dt;
    iopts.equilibrium = cfg.equilibrium;
    iopts.stepper = cfg.stepper;

    const std::vector<double> theta0v = flatten(init);
    const Eigen::VectorXd theta0 =
        Eigen::Map<const Eigen::VectorXd>(theta0v.data(), theta0v.size());

    const auto ti0 = clock_type::now();
    const Trajectory traj = integrate(fn, d, theta0, cfg.time, iopts);
    const double integrate_seconds = seconds_since(ti0);

    RunSummary summary;
    summary.out_dir = cfg.out_dir;
    summary.final_time = traj.final_time();
    summary.equilibrium_detected = traj.equilibrium_detected;
    summary.equilibrium_time = traj.equilibrium_time;
    summary.max_drift_pre = traj.max_drift_pre;
    summary.max_drift_post = traj.max_drift_post;
    summary.renormalizations = traj.renormalizations;
    summary.steps_accepted = traj.steps_accepted;
    summary.steps_rejected = traj.steps_rejected;
    summary.rhs_evals = traj.rhs_evals;
    summary.assembly_seconds = rhs.assembly_seconds();
    summary.solve_seconds = rhs.solve_seconds();
    summary.integrate_seconds = integrate_seconds;

    const MixtureState final_state = state_at(traj.records.back(), d);
    summary.final_centers = final_state.center;

    // Parameter trajectory.
    {
        std::vector<std::string> header{"t"};
        for (int i = 0; i < final_state.terms(); ++i) {
            header.push_back("amp_" + std::to_string(i + 1));
            header.push_back("width_" + std::to_string(i + 1));
            for (int ax = 0; ax < d; ++ax) {
                header.push_back("c_" + std::to_string(i + 1) + "_" + std::to_string(ax + 1));
            }
        }
        header.push_back("rate");
        header.push_back("cond");
        CsvBuilder csv(header);
        std::vector<double> row(header.size());
        for (const StepRecord& rec : traj.records) {
            row[0] = rec.t;
            for (int i = 0; i < rec.theta.size(); ++i) row[1 + i] = rec.theta(i);
            row[1 + rec.theta.size()] = rec.rate;
            row[2 + rec.theta.size()] = rec.cond_estimate;
            csv.row(row);
        }
        atomic_write_text(fs::path(cfg.out_dir) / "trajectory.csv", csv.text());
    }

    // Moments and conservation.
    {
        std::vector<std::string> header{"t"};
        for (int i = 0; i < d; ++i) header.push_back("mean_" + std::to_string(i + 1));
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                header.push_back("cov_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
            }
        }
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                header.push_back("second_" + std::to_string(i + 1) + "_" +
                                 std::to_string(j + 1));
            }
        }
        header.push_back("total_prob");
        CsvBuilder moments(header);
        CsvBuilder conservation({"t", "total_prob", "drift"});
        std::vector<double> row(header.size());
        for (const StepRecord& rec : traj.records) {
            const MixtureState s = state_at(rec, d);
            const MixtureMoments mm = mixture_moments(s);
            std::size_t at = 0;
            row[at++] = rec.t;
            for (int i = 0; i < d; ++i) row[at++] = mm.mean(i);
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) row[at++] = mm.covariance(i, j);
            }
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) row[at++] = mm.second(i, j);
            }
            row[at++] = rec.total_prob;
            moments.row(row);
            const double cons_row[3] = {rec.t, rec.total_prob,
                                        std::abs(rec.total_prob - 1.0)};
            conservation.row(cons_row);
        }
        atomic_write_text(fs::path(cfg.out_dir) / "moments.csv", moments.text());
        atomic_write_text(fs::path(cfg.out_dir) / "conservation.csv", conservation.text());
    }

    // Density slices.
    json slice_report = json::array();
    for (std::size_t si = 0; si < cfg.slices.times.size(); ++si) {
        const double t_req = cfg.slices.times[si];
        const std::size_t ri = nearest_record(traj, t_req);
        const MixtureState s = state_at(traj.records[ri], d);
        const int k = static_cast<int>(cfg.slices.axes.size());

        std::vector<std::string> header;
        for (int a = 0; a < k; ++a) {
            header.push_back("x_" + std::to_string(cfg.slices.axes[a] + 1));
        }
        header.push_back("density");
        CsvBuilder csv(header);

        std::vector<int> idx(k, 0);
        std::vector<double> coords(k);
        long total = 1;
        for (int a = 0; a < k; ++a) total *= cfg.slices.counts[a];
        std::vector<double> row(k + 1);
        for (long p = 0; p < total; ++p) {
            for (int a = 0; a < k; ++a) {
                coords[a] = cfg.slices.lo[a] + (cfg.slices.hi[a] - cfg.slices.lo[a]) *
                                                   idx[a] / (cfg.slices.counts[a] - 1);
                row[a] = coords[a];
            }
            row[k] = marginal_density(s, cfg.slices.axes, coords);
            csv.row(row);
            for (int a = k - 1; a >= 0; --a) {
                if (++idx[a] < cfg.slices.counts[a]) break;
                idx[a] = 0;
            }
        }
        const std::string file = "slice_" + std::to_string(si) + ".csv";
        atomic_write_text(fs::path(cfg.out_dir) / file, csv.text());
        slice_report.push_back(json{{"file", file},
                                    {"requested_time", t_req},
                                    {"time", traj.records[ri].t},
                                    {"axes", cfg.slices.axes},
                                    {"mass", marginal_mass_box(s, cfg.slices.axes,
                                                               cfg.slices.lo, cfg.slices.hi)}});
    }

    // Problem-specific error reporting.
    json errors = json::object();
    if (cfg.problem == "ou") {
        errors = ou_errors(cfg, traj, summary);
    } else if (cfg.problem == "bistable" || cfg.problem == "duffing") {
        errors = equilibrium_errors(cfg, final_state, summary);
    } else if (cfg.problem == "harmonic-trap") {
        errors = harmonic_errors(cfg, traj, init, summary);
    }

    // Particle-ensemble cross check.
    json ensemble_report = json::object();
    if (cfg.ensemble.enabled) {
        const auto te0 = clock_type::now();
        const std::vector<Snapshot> snaps =
            simulate_sde(cfg.drift, init, cfg.time.t0, cfg.ensemble.times, cfg.ensemble.spec);
        summary.ensemble_seconds = seconds_since(te0);

        std::vector<std::string> header{"t"};
        for (int i = 0; i < d; ++i) header.push_back("mean_" + std::to_string(i + 1));
        for (int i = 0; i < d; ++i) header.push_back("se_mean_" + std::to_string(i + 1));
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                header.push_back("second_" + std::to_string(i + 1) + "_" +
                                 std::to_string(j + 1));
            }
        }
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                header.push_back("se_second_" + std::to_string(i + 1) + "_" +
                                 std::to_string(j + 1));
            }
        }
        header.push_back("n");
        CsvBuilder csv(header);
        std::vector<double> row(header.size());

        json checkpoints = json::array();
        double max_z = 0.0;
        for (const Snapshot& snap : snaps) {
            const Moments mc = empirical_moments(snap, d);
            std::size_t at = 0;
            row[at++] = snap.t;
            for (int i = 0; i < d; ++i) row[at++] = mc.mean(i);
            for (int i = 0; i < d; ++i) row[at++] = mc.se_mean(i);
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) row[at++] = mc.second(i, j);
            }
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) row[at++] = mc.se_second(i, j);
            }
            row[at++] = static_cast<double>(mc.n);
            csv.row(row);

            const std::size_t ri = nearest_record(traj, snap.t);
            const MixtureMoments mm = mixture_moments(state_at(traj.records[ri], d));
            double z = 0.0;
            for (int i = 0; i < d; ++i) {
                z = std::max(z, std::abs(mm.mean(i) - mc.mean(i)) /
                                    std::max(mc.se_mean(i), 1e-300));
                for (int j = 0; j < d; ++j) {
                    z = std::max(z, std::abs(mm.second(i, j) - mc.second(i, j)) /
                                        std::max(mc.se_second(i, j), 1e-300));
                }
            }
            max_z = std::max(max_z, z);
            checkpoints.push_back(json{{"t", snap.t},
                                       {"record_time", traj.records[ri].t},
                                       {"max_abs_z", z}});
        }
        atomic_write_text(fs::path(cfg.out_dir) / "ensemble_moments.csv", csv.text());
        summary.max_ensemble_z = max_z;
        ensemble_report = json{{"particles", cfg.ensemble.spec.particles},
                               {"h", cfg.ensemble.spec.h},
                               {"checkpoints", checkpoints},
                               {"max_abs_z", max_z},
                               {"seconds", summary.ensemble_seconds}};
    }

    summary.total_seconds = seconds_since(wall0);

    json report{
        {"problem", cfg.problem},
        {"r", cfg.r},
        {"dim", d},
        {"hilbert_mode", cfg.mode == HilbertMode::l2_symbolic ? "l2-symbolic"
                         : cfg.mode == HilbertMode::l2_collocation ? "l2-collocation"
                                                                   : "weighted-collocation"},
        {"alpha", cfg.alpha},
        {"seed", cfg.seed},
        {"threads", cfg.threads},
        {"time",
         {{"t0", cfg.time.t0},
          {"t_end", cfg.time.t_end},
          {"rtol", cfg.time.rtol},
          {"atol", cfg.time.atol},
          {"final_time", summary.final_time}}},
        {"equilibrium",
         {{"detected", summary.equilibrium_detected}, {"time", summary.equilibrium_time}}},
        {"conservation",
         {{"max_drift_pre_renormalize", summary.max_drift_pre},
          {"max_drift", summary.max_drift_post},
          {"renormalizations", summary.renormalizations}}},
        {"steps",
         {{"accepted", summary.steps_accepted},
          {"rejected", summary.steps_rejected},
          {"rhs_evals", summary.rhs_evals}}},
        {"timing",
         {{"assembly_seconds", summary.assembly_seconds},
          {"solve_seconds", summary.solve_seconds},
          {"integrate_seconds", summary.integrate_seconds},
          {"ensemble_seconds", summary.ensemble_seconds},
          {"total_seconds", summary.total_seconds}}},
        {"errors", errors},
        {"slices", slice_report},
        {"final_centers", summary.final_centers},
    };
    if (cfg.ensemble.enabled) report["ensemble"] = ensemble_report;

    atomic_write_text(fs::path(cfg.out_dir) / "report.json", report.dump(2) + "\n");
    return summary;
}

std::string compare_outputs(const std::string& dir_a, const std::string& dir_b) {
    const Table a = read_csv(fs::path(dir_a) / "moments.csv");
    const fs::path b_ens = fs::path(dir_b) / "ensemble_moments.csv";
    const bool b_is_ensemble = fs::exists(b_ens);
    const Table bt = b_is_ensemble ? read_csv(b_ens) : read_csv(fs::path(dir_b) / "moments.csv");

    const int ta = a.col("t"), tb = bt.col("t");
    if (ta < 0 || tb < 0) throw std::runtime_error("moment files lack a time column");

    int d = 0;
    while (a.col("mean_" + std::to_string(d + 1)) >= 0 &&
           bt.col("mean_" + std::to_string(d + 1)) >= 0) {
        ++d;
    }
    if (d == 0) throw std::runtime_error("moment files lack mean columns");

    json checkpoints = json::array();
    double max_mean_diff = 0.0, max_second_diff = 0.0, max_z = 0.0;
    bool any_z = false;

    for (const std::vector<double>& brow : bt.rows) {
        const double t = brow[tb];
        const std::vector<double>* arow = nullptr;
        for (const std::vector<double>& cand : a.rows) {
            if (std::abs(cand[ta] - t) <= 1e-9) {
                arow = &cand;
                break;
            }
        }
        if (!arow) {
            throw std::runtime_error("time grids do not match: no checkpoint at t = " +
                                     format_double(t) + " in " + dir_a);
        }
        double mean_diff = 0.0, second_diff = 0.0, z = 0.0;
        for (int i = 0; i < d; ++i) {
            const int ai = a.col("mean_" + std::to_string(i + 1));
            const int bi = bt.col("mean_" + std::to_string(i + 1));
            const double diff = std::abs((*arow)[ai] - brow[bi]);
            mean_diff = std::max(mean_diff, diff);
            const int sei = bt.col("se_mean_" + std::to_string(i + 1));
            if (sei >= 0) {
                any_z = true;
                z = std::max(z, diff / std::max(brow[sei], 1e-300));
            }
            for (int jj = 0; jj < d; ++jj) {
                const std::string tag = std::to_string(i + 1) + "_" + std::to_string(jj + 1);
                const int aij = a.col("second_" + tag);
                const int bij = bt.col("second_" + tag);
                if (aij < 0 || bij < 0) continue;
                const double sdiff = std::abs((*arow)[aij] - brow[bij]);
                second_diff = std::max(second_diff, sdiff);
                const int seij = bt.col("se_second_" + tag);
                if (seij >= 0) z = std::max(z, sdiff / std::max(brow[seij], 1e-300));
            }
        }
        max_mean_diff = std::max(max_mean_diff, mean_diff);
        max_second_diff = std::max(max_second_diff, second_diff);
        max_z = std::max(max_z, z);
        json entry{{"t", t},
                   {"mean_abs_diff_max", mean_diff},
                   {"second_abs_diff_max", second_diff}};
        if (any_z) entry["max_abs_z"] = z;
        checkpoints.push_back(entry);
    }

    json report{{"dir_a", dir_a},
                {"dir_b", dir_b},
                {"reference_has_standard_errors", b_is_ensemble},
                {"checkpoints", checkpoints},
                {"mean_abs_diff_max", max_mean_diff},
                {"second_abs_diff_max", max_second_diff}};
    if (any_z) report["max_abs_z"] = max_z;
    return report.dump(2) + "\n";
}

} // namespace ronsfp
