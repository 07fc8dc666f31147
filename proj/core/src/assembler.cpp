#include "ronsfp/assembler.hpp"

#include "ronsfp/errors.hpp"
#include "ronsfp/quadrature.hpp"
#include "parallel_util.hpp"

#include <Eigen/Cholesky>

#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace ronsfp {

CollocationGrid CollocationGrid::equidistant_box(std::span<const double> lo,
                                                 std::span<const double> hi,
                                                 std::span<const int> counts) {
    const int d = static_cast<int>(lo.size());
    if (static_cast<int>(hi.size()) != d || static_cast<int>(counts.size()) != d) {
        throw std::invalid_argument("box bounds and counts must share the dimension");
    }
    long total = 1;
    for (int ax = 0; ax < d; ++ax) {
        if (counts[ax] < 1) throw std::invalid_argument("grid count must be >= 1");
        if (!(hi[ax] > lo[ax])) throw std::invalid_argument("box upper bound must exceed lower");
        total *= counts[ax];
        if (total > 50'000'000) throw std::invalid_argument("grid too large");
    }
    CollocationGrid grid;
    grid.dim = d;
    grid.points.resize(static_cast<std::size_t>(total) * d);
    std::vector<int> idx(d, 0);
    for (long k = 0; k < total; ++k) {
        for (int ax = 0; ax < d; ++ax) {
            const int n = counts[ax];
            const double x = n == 1 ? 0.5 * (lo[ax] + hi[ax])
                                    : lo[ax] + (hi[ax] - lo[ax]) * idx[ax] / (n - 1);
            grid.points[static_cast<std::size_t>(k) * d + ax] = x;
        }
        for (int ax = d - 1; ax >= 0; --ax) {
            if (++idx[ax] < counts[ax]) break;
            idx[ax] = 0;
        }
    }
    return grid;
}

CollocationGrid CollocationGrid::random_uniform_box(std::span<const double> lo,
                                                    std::span<const double> hi,
                                                    int n, std::uint64_t seed) {
    const int d = static_cast<int>(lo.size());
    if (static_cast<int>(hi.size()) != d) {
        throw std::invalid_argument("box bounds dimension mismatch");
    }
    if (n < 1) throw std::invalid_argument("need at least one point");
    CollocationGrid grid;
    grid.dim = d;
    grid.points.resize(static_cast<std::size_t>(n) * d);
    std::mt19937_64 rng(seed);
    for (int k = 0; k < n; ++k) {
        for (int ax = 0; ax < d; ++ax) {
            std::uniform_real_distribution<double> u(lo[ax], hi[ax]);
            grid.points[static_cast<std::size_t>(k) * d + ax] = u(rng);
        }
    }
    return grid;
}

CollocationGrid CollocationGrid::from_points(int dim, std::vector<double> points) {
    if (dim < 1) throw std::invalid_argument("bad grid dimension");
    if (points.empty() || points.size() % dim != 0) {
        throw std::invalid_argument("point storage is not a multiple of dim");
    }
    CollocationGrid grid;
    grid.dim = dim;
    grid.points = std::move(points);
    return grid;
}

RonsSystem assemble_srons(const DriftModel& drift, const MixtureState& state,
                          double t, double alpha, int threads) {
    if (drift.dim != state.dim) {
        throw std::invalid_argument("drift and mixture dimension mismatch");
    }
    const int d = state.dim;
    const int r = state.terms();
    const int b = d + 2; // parameters per term
    const int n = state.n_params();
    const std::vector<GaussPoly> partials = parameter_partials(state);
    const GaussPolySum lp = apply_fp_operator(drift, state, t);
    if (static_cast<int>(lp.terms.size()) != r) {
        throw std::logic_error("operator image lost its one-Gaussian-per-term structure");
    }

    int lp_deg = 0;
    for (const auto& term : lp.terms) {
        for (int ax = 0; ax < d; ++ax) lp_deg = std::max(lp_deg, term.poly.axis_degree(ax));
    }
    // Partials have per-axis degree at most 2 (the width partial carries the
    // squared distance); one table degree covers every pairing below.
    const int table_deg = 2 + std::max(2, lp_deg);

    RonsSystem sys;
    sys.alpha = alpha;
    sys.mode = HilbertMode::l2_symbolic;
    sys.metric.resize(n, n);
    sys.rhs.resize(n);

    // All partials of mixture term k share that term's Gaussian, as does the
    // k-th image term of the operator. One combined-Gaussian moment table per
    // term pair therefore serves the whole (d+2) x (d+2) metric block and the
    // matching RHS contributions.
    detail::parallel_for(static_cast<std::size_t>(r), threads, [&](std::size_t uk) {
        const int k = static_cast<int>(uk);
        for (int a = 0; a < b; ++a) sys.rhs(k * b + a) = 0.0;
        for (int l = 0; l < r; ++l) {
            const GaussianPair pair =
                combine_gaussians(state.center_of(k), state.width[k] * state.width[k],
                                  state.center_of(l), state.width[l] * state.width[l]);
            if (pair.prefactor == 0.0) {
                if (l >= k) {
                    for (int a = 0; a < b; ++a) {
                        for (int c = 0; c < b; ++c) {
                            sys.metric(k * b + a, l * b + c) = 0.0;
                            sys.metric(l * b + c, k * b + a) = 0.0;
                        }
                    }
                }
                continue;
            }
            const MomentTable table(pair, table_deg);
            if (l > k) {
                for (int a = 0; a < b; ++a) {
                    for (int c = 0; c < b; ++c) {
                        const double v = pair.prefactor *
                                         pair_integral(partials[k * b + a].poly,
                                                       partials[l * b + c].poly, table);
                        sys.metric(k * b + a, l * b + c) = v;
                        sys.metric(l * b + c, k * b + a) = v;
                    }
                }
            } else if (l == k) {
                for (int a = 0; a < b; ++a) {
                    for (int c = a; c < b; ++c) {
                        const double v = pair.prefactor *
                                         pair_integral(partials[k * b + a].poly,
                                                       partials[k * b + c].poly, table);
                        sys.metric(k * b + a, k * b + c) = v;
                        sys.metric(k * b + c, k * b + a) = v;
                    }
                }
            }
            for (int a = 0; a < b; ++a) {
                sys.rhs(k * b + a) += pair.prefactor *
                                      pair_integral(partials[k * b + a].poly,
                                                    lp.terms[l].poly, table);
            }
        }
    });

    const std::vector<double> gI = total_probability_gradient(state);
    sys.constraint_grad = Eigen::Map<const Eigen::VectorXd>(gI.data(), n);
    return sys;
}

RonsSystem assemble_crons(const DriftModel& drift, const MixtureState& state,
                          double t, double alpha, const CollocationGrid& grid,
                          bool weighted, int threads, double weight_floor) {
    if (drift.dim != state.dim) {
        throw std::invalid_argument("drift and mixture dimension mismatch");
    }
    if (grid.dim != state.dim) {
        throw std::invalid_argument("collocation grid dimension mismatch");
    }
    const int n = state.n_params();
    const int N = grid.n_points();
    if (N < 1) throw std::invalid_argument("collocation grid is empty");

    const GaussPolySum lp = apply_fp_operator(drift, state, t);

    // Jw(k, i) = w_k dp/dtheta_i(x_k), bw(k) = w_k (L p)(x_k); column-major
    // storage makes the per-entry reductions contiguous.
    Eigen::MatrixXd Jw(N, n);
    Eigen::VectorXd bw(N);
    std::vector<int> clamped(N, 0);

    detail::parallel_for(static_cast<std::size_t>(N), threads, [&](std::size_t k) {
        const auto x = grid.point(static_cast<int>(k));
        const std::vector<double> grad = param_gradient(state, x);
        double w2 = 1.0;
        if (weighted) {
            const double p = evaluate(state, x);
            if (p < weight_floor) {
                clamped[k] = 1;
                w2 = 1.0 / weight_floor;
            } else {
                w2 = 1.0 / p;
            }
        }
        const double w = std::sqrt(w2);
        for (int i = 0; i < n; ++i) Jw(k, i) = w * grad[i];
        bw(k) = w * lp.evaluate(x);
    });

    RonsSystem sys;
    sys.alpha = alpha;
    sys.mode = weighted ? HilbertMode::weighted_collocation : HilbertMode::l2_collocation;
    for (int v : clamped) sys.clamped_points += v;
    sys.metric.resize(n, n);
    sys.rhs.resize(n);

    detail::parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
        const auto ci = Jw.col(static_cast<int>(i));
        for (std::size_t j = i; j < static_cast<std::size_t>(n); ++j) {
            double acc = 0.0;
            const auto cj = Jw.col(static_cast<int>(j));
            for (int k = 0; k < N; ++k) acc += ci(k) * cj(k);
            sys.metric(i, j) = acc;
            sys.metric(j, i) = acc;
        }
        double fi = 0.0;
        for (int k = 0; k < N; ++k) fi += ci(k) * bw(k);
        sys.rhs(i) = fi;
    });

    const std::vector<double> gI = total_probability_gradient(state);
    sys.constraint_grad = Eigen::Map<const Eigen::VectorXd>(gI.data(), n);
    return sys;
}

namespace {

struct Factorization {
    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::LDLT<Eigen::MatrixXd> ldlt;
    bool pivoted = false;
    double cond_estimate = 1.0;

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        if (pivoted) return ldlt.solve(b);
        return llt.solve(b);
    }
};

Factorization factorize(const RonsSystem& sys, double time) {
    const int n = static_cast<int>(sys.metric.rows());
    Eigen::MatrixXd K = sys.metric;
    K.diagonal().array() += sys.alpha;

    Factorization f;
    f.llt.compute(K);
    if (f.llt.info() == Eigen::Success) {
        const auto d = f.llt.matrixLLT().diagonal();
        double lo = d(0), hi = d(0);
        for (int i = 1; i < n; ++i) {
            lo = std::min(lo, d(i));
            hi = std::max(hi, d(i));
        }
        if (lo > 0.0) {
            f.cond_estimate = (hi / lo) * (hi / lo);
            return f;
        }
    }
    f.pivoted = true;
    f.ldlt.compute(K);
    if (f.ldlt.info() != Eigen::Success || !f.ldlt.isPositive()) {
        throw RegularizationError(time, sys.alpha);
    }
    const auto d = f.ldlt.vectorD();
    double lo = d(0), hi = d(0);
    for (int i = 1; i < n; ++i) {
        lo = std::min(lo, d(i));
        hi = std::max(hi, d(i));
    }
    if (!(lo > 0.0)) throw RegularizationError(time, sys.alpha);
    f.cond_estimate = hi / lo;
    return f;
}

} // namespace

double lagrange_multiplier(const RonsSystem& sys) {
    const Factorization f = factorize(sys, 0.0);
    const Eigen::VectorXd u = f.solve(sys.rhs);
    const Eigen::VectorXd v = f.solve(sys.constraint_grad);
    const double denom = sys.constraint_grad.dot(v);
    if (denom <= 0.0) return 0.0; // constraint gradient vanished
    return sys.constraint_grad.dot(u) / denom;
}

SolveResult solve_constrained(const RonsSystem& sys, double time) {
    const Factorization f = factorize(sys, time);
    const Eigen::VectorXd u = f.solve(sys.rhs);
    const Eigen::VectorXd v = f.solve(sys.constraint_grad);
    const double denom = sys.constraint_grad.dot(v);

    SolveResult out;
    out.cond_estimate = f.cond_estimate;
    out.lambda = denom > 0.0 ? sys.constraint_grad.dot(u) / denom : 0.0;
    out.thetadot = u - out.lambda * v;
    return out;
}

Eigen::MatrixXd fisher_metric_quadrature(const MixtureState& state,
                                         std::span<const double> lo,
                                         std::span<const double> hi,
                                         double rel_tol) {
    if (state.dim > 2) {
        throw std::invalid_argument("fisher_metric_quadrature supports dimensions 1 and 2");
    }
    if (static_cast<int>(lo.size()) != state.dim || static_cast<int>(hi.size()) != state.dim) {
        throw std::invalid_argument("box bounds dimension mismatch");
    }
    const int n = state.n_params();
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const double v = integrate_box(
                [&](std::span<const double> x) {
                    const double p = evaluate(state, x);
                    if (p <= 0.0) return 0.0;
                    const std::vector<double> grad = param_gradient(state, x);
                    return grad[i] * grad[j] / p;
                },
                lo, hi, rel_tol);
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

RonsRhs::RonsRhs(DriftModel drift, RhsOptions opts)
    : drift_(std::move(drift)), opts_(std::move(opts)) {
    drift_.validate();
    if (opts_.alpha < 0.0) throw std::invalid_argument("alpha must be nonnegative");
    if (opts_.space.mode != HilbertMode::l2_symbolic &&
        opts_.space.grid.n_points() == 0) {
        throw std::invalid_argument("collocation mode requires a grid");
    }
}

bool RonsRhs::operator()(double t, const Eigen::VectorXd& theta, Eigen::VectorXd& out,
                         double* cond_estimate) {
    const MixtureState state =
        unflatten(drift_.dim, std::span<const double>(theta.data(), theta.size()));
    if (!state.is_usable(opts_.width_floor)) return false;

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    RonsSystem sys;
    if (opts_.space.mode == HilbertMode::l2_symbolic) {
        sys = assemble_srons(drift_, state, t, opts_.alpha, opts_.threads);
    } else {
        sys = assemble_crons(drift_, state, t, opts_.alpha, opts_.space.grid,
                             opts_.space.mode == HilbertMode::weighted_collocation,
                             opts_.threads, opts_.weight_floor);
    }
    clamped_total_ += sys.clamped_points;
    const auto t1 = clock::now();

    const SolveResult sol = solve_constrained(sys, t);
    const auto t2 = clock::now();

    assembly_seconds_ += std::chrono::duration<double>(t1 - t0).count();
    solve_seconds_ += std::chrono::duration<double>(t2 - t1).count();
    ++evals_;

    if (cond_estimate) *cond_estimate = sol.cond_estimate;
    if (!sol.thetadot.allFinite()) return false;
    out = sol.thetadot;
    return true;
}

} // namespace ronsfp
