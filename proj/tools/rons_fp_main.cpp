#include "ronsfp/config.hpp"
#include "ronsfp/errors.hpp"
#include "ronsfp/runner.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

namespace {

void print_summary(const ronsfp::RunSummary& s) {
    std::printf("wrote %s\n", s.out_dir.c_str());
    std::printf("  final time        %.6g%s\n", s.final_time,
                s.equilibrium_detected ? " (equilibrium stop)" : "");
    std::printf("  steps             %zu accepted, %zu rejected, %zu rhs evals\n",
                s.steps_accepted, s.steps_rejected, s.rhs_evals);
    std::printf("  mass drift        %.3e (pre-renormalize %.3e, %d renormalizations)\n",
                s.max_drift_post, s.max_drift_pre, s.renormalizations);
    if (s.primary_error == s.primary_error) {
        std::printf("  reference error   %.6e\n", s.primary_error);
    }
    if (s.covariance_error == s.covariance_error) {
        std::printf("  covariance error  %.6e\n", s.covariance_error);
    }
    if (s.max_ensemble_z == s.max_ensemble_z) {
        std::printf("  ensemble |z| max  %.3f\n", s.max_ensemble_z);
    }
    std::printf("  wall time         %.2fs (assembly %.2fs, solves %.2fs, ensemble %.2fs)\n",
                s.total_seconds, s.assembly_seconds, s.solve_seconds, s.ensemble_seconds);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mesh-free Fokker-Planck solver: Gaussian mixtures evolved by "
                 "constrained parameter dynamics"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    int threads = 1;

    CLI::App* runc = app.add_subcommand("run", "Solve a configured problem and write outputs");
    runc->add_option("config", config_path, "JSON configuration file")->required();
    CLI::Option* out_opt = runc->add_option("--out", out_dir, "Output directory (overrides config)");
    CLI::Option* seed_opt = runc->add_option("--seed", seed, "Base random seed (overrides config)");
    CLI::Option* threads_opt =
        runc->add_option("--threads", threads, "Worker threads (overrides config)")
            ->check(CLI::PositiveNumber);

    std::string dir_a, dir_b;
    CLI::App* cmp = app.add_subcommand(
        "compare", "Compare moment checkpoints between two run directories");
    cmp->add_option("dir_a", dir_a, "Run directory holding moments.csv")->required();
    cmp->add_option("dir_b", dir_b, "Run directory holding ensemble_moments.csv or moments.csv")
        ->required();

    std::string validate_path;
    CLI::App* val = app.add_subcommand(
        "validate", "Check a configuration file, reporting every violation");
    val->add_option("config", validate_path, "JSON configuration file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (runc->parsed()) {
            ronsfp::RunConfig cfg = ronsfp::load_run_config(config_path);
            if (out_opt->count() > 0) cfg.out_dir = out_dir;
            if (seed_opt->count() > 0) {
                cfg.seed = seed;
                cfg.ensemble.spec.seed = seed;
            }
            if (threads_opt->count() > 0) {
                cfg.threads = threads;
                cfg.ensemble.spec.threads = threads;
            }
            print_summary(ronsfp::run_config(cfg));
            return 0;
        }
        if (cmp->parsed()) {
            std::fputs(ronsfp::compare_outputs(dir_a, dir_b).c_str(), stdout);
            return 0;
        }
        if (val->parsed()) {
            ronsfp::load_run_config(validate_path);
            std::printf("%s: ok\n", validate_path.c_str());
            return 0;
        }
    } catch (const ronsfp::ConfigError& e) {
        for (const std::string& issue : e.issues()) {
            std::fprintf(stderr, "config error: %s\n", issue.c_str());
        }
        return 2;
    } catch (const ronsfp::SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
