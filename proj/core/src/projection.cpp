#include "ronsfp/projection.hpp"

#include "ronsfp/errors.hpp"
#include "ronsfp/oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

namespace ronsfp {

namespace {

constexpr double kWeightFloor = 1e-14;

CollocationGrid auto_grid(const MixtureState& guess, std::size_t n, std::uint64_t seed) {
    MixtureState inflated = guess;
    for (double& w : inflated.width) w *= 4.0;
    return CollocationGrid::from_points(guess.dim,
                                        sample_mixture(inflated, n, seed));
}

/// Coincident terms produce duplicate Jacobian columns; nudge their centers
/// apart so Gauss-Newton can separate them.
void split_duplicates(MixtureState& state, std::uint64_t seed) {
    const int r = state.terms();
    const int d = state.dim;
    std::mt19937_64 rng(seed ^ 0xabcdef12u);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < r; ++i) {
        for (int j = i + 1; j < r; ++j) {
            double dist = 0.0;
            for (int ax = 0; ax < d; ++ax) {
                const double diff = state.center[i * d + ax] - state.center[j * d + ax];
                dist += diff * diff;
            }
            const double scale = std::min(state.width[i], state.width[j]);
            if (dist < 1e-24 * scale * scale &&
                std::abs(state.width[i] - state.width[j]) < 1e-12 * scale) {
                for (int ax = 0; ax < d; ++ax) {
                    state.center[j * d + ax] += 1e-3 * scale * gauss(rng);
                }
            }
        }
    }
}

double objective_at(const MixtureState& state,
                    const std::function<double(std::span<const double>)>& p0,
                    const CollocationGrid& grid, const Eigen::VectorXd& w) {
    double obj = 0.0;
    for (int k = 0; k < grid.n_points(); ++k) {
        const double r = evaluate(state, grid.point(k)) - p0(grid.point(k));
        obj += w(k) * r * r;
    }
    return obj;
}

} // namespace

MixtureState project_initial_condition(
    const std::function<double(std::span<const double>)>& p0,
    const MixtureState& guess, const HilbertChoice& space,
    const ProjectionOptions& opts, ProjectionReport* report) {
    guess.validate();
    const int n = guess.n_params();

    CollocationGrid grid = space.grid;
    bool grid_auto = false;
    if (grid.n_points() == 0) {
        const std::size_t count = opts.auto_points
                                      ? opts.auto_points
                                      : std::max<std::size_t>(512, 64u * n);
        grid = auto_grid(guess, count, opts.grid_seed);
        grid_auto = true;
    }
    if (grid.dim != guess.dim) {
        throw std::invalid_argument("collocation grid dimension does not match the mixture");
    }
    const int N = grid.n_points();
    if (N < n) {
        throw std::invalid_argument("projection needs at least as many points as parameters");
    }

    Eigen::VectorXd w = Eigen::VectorXd::Ones(N);
    if (space.mode == HilbertMode::weighted_collocation) {
        for (int k = 0; k < N; ++k) {
            w(k) = 1.0 / std::max(p0(grid.point(k)), kWeightFloor);
        }
    }

    const double obj_guess = objective_at(guess, p0, grid, w);

    MixtureState state = guess;
    split_duplicates(state, opts.grid_seed);
    double obj = objective_at(state, p0, grid, w);

    Eigen::MatrixXd J(N, n);
    Eigen::VectorXd resid(N);
    double mu = 1e-6;
    int iter = 0;
    bool converged = obj <= 1e-28 * std::max(1.0, obj_guess) || obj == 0.0;
    if (converged) state = guess; // exact fixed point; the nudge was unnecessary

    for (; iter < opts.max_iterations && !converged; ++iter) {
        for (int k = 0; k < N; ++k) {
            const auto x = grid.point(k);
            resid(k) = evaluate(state, x) - p0(x);
            const std::vector<double> g = param_gradient(state, x);
            for (int i = 0; i < n; ++i) J(k, i) = g[i];
        }
        const Eigen::MatrixXd JtWJ =
            J.transpose() * w.asDiagonal() * J;
        const Eigen::VectorXd JtWr = J.transpose() * (w.asDiagonal() * resid);
        Eigen::VectorXd diag = JtWJ.diagonal();
        const double diag_floor = 1e-12 * std::max(1.0, diag.maxCoeff());
        for (int i = 0; i < n; ++i) diag(i) = std::max(diag(i), diag_floor);

        bool stepped = false;
        for (int attempt = 0; attempt < 25; ++attempt) {
            Eigen::MatrixXd A = JtWJ;
            A.diagonal() += mu * diag;
            const Eigen::VectorXd delta = A.ldlt().solve(JtWr);
            if (!delta.allFinite()) {
                mu *= 10.0;
                continue;
            }

            MixtureState trial = state;
            std::vector<double> theta = flatten(state);
            for (int i = 0; i < n; ++i) theta[i] -= delta(i);
            trial = unflatten(state.dim, theta);
            if (!trial.is_usable(opts.width_floor)) {
                mu *= 10.0;
                continue;
            }
            const double trial_obj = objective_at(trial, p0, grid, w);
            if (std::isfinite(trial_obj) && trial_obj < obj) {
                const double improvement = (obj - trial_obj) / std::max(obj, 1e-300);
                state = std::move(trial);
                obj = trial_obj;
                mu = std::max(mu * 0.3, 1e-14);
                stepped = true;
                if (improvement < opts.tol || obj <= 1e-28 * std::max(1.0, obj_guess)) {
                    converged = true;
                }
                break;
            }
            mu *= 10.0;
        }
        if (!stepped) {
            // Damping maxed out without progress: treat as a stationary point.
            converged = true;
        }
    }

    if (!converged) {
        throw ProjectionError("initial-condition projection did not converge", obj, iter);
    }

    const double pre_rescale_obj = obj;
    if (total_probability(state) > 0.0) {
        normalize_total_probability(state);
        obj = objective_at(state, p0, grid, w);
    }
    if (pre_rescale_obj > obj_guess * (1.0 + 1e-12) && obj_guess > 0.0) {
        throw ProjectionError("projection ended above the starting objective", obj, iter);
    }

    if (report) {
        report->objective = obj;
        report->objective_at_guess = obj_guess;
        report->iterations = iter;
        report->n_points = static_cast<std::size_t>(N);
        report->grid_auto = grid_auto;
    }
    return state;
}

} // namespace ronsfp
