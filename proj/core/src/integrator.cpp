#include "ronsfp/integrator.hpp"

#include "ronsfp/errors.hpp"
#include "ronsfp/mixture.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <span>
#include <stdexcept>

namespace ronsfp {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - bhat, the embedded 4th-order error weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

// Rosenbrock 2(3) pair: L-stable two-stage method with a third stage for
// the error estimate, the classic ode23s construction.
constexpr double rd = 0.29289321881345254; // 1 / (2 + sqrt(2))
constexpr double re32 = 7.414213562373095;  // 6 + sqrt(2)

constexpr double kSafety = 0.9;
constexpr double kShrinkFloor = 0.2;
constexpr double kGrowCap = 10.0;
constexpr double kGrowCapRos = 5.0;
constexpr double kMinStep = 1e-14;

double rate_of(const Eigen::VectorXd& k, const Eigen::VectorXd& y) {
    const double ny = y.norm();
    return k.norm() / std::max(ny, 1e-300);
}

/// Index of a collapsed width in the flattened state, or -1.
int collapsed_term(int dim, const Eigen::VectorXd& y, double floor) {
    const int block = dim + 2;
    const int r = static_cast<int>(y.size()) / block;
    for (int i = 0; i < r; ++i) {
        const double w = y(i * block + 1);
        if (!(w > floor) || !std::isfinite(w)) return i;
    }
    return -1;
}

} // namespace

Trajectory integrate(const OdeRhs& rhs, int dim, const Eigen::VectorXd& theta0,
                     const TimeGrid& grid, const IntegrateOptions& opts) {
    if (!(grid.t_end > grid.t0)) throw std::invalid_argument("t_end must exceed t0");
    if (!(grid.h0 > 0.0)) throw std::invalid_argument("h0 must be positive");
    if (theta0.size() % (dim + 2) != 0 || theta0.size() == 0) {
        throw std::invalid_argument("theta0 length is not a multiple of dim + 2");
    }

    const auto state_of = [&](const Eigen::VectorXd& y) {
        return unflatten(dim, std::span<const double>(y.data(), y.size()));
    };
    {
        const MixtureState s0 = state_of(theta0);
        s0.validate();
        const double mass = total_probability(s0);
        if (std::abs(mass - 1.0) > 1e-10) {
            throw std::invalid_argument(
                "initial total probability is " + std::to_string(mass) +
                "; normalize the initial condition before integrating");
        }
    }

    const Eigen::Index n = theta0.size();
    Eigen::VectorXd y = theta0;
    Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n);
    double t = grid.t0;
    double h = std::min(grid.h0, grid.t_end - grid.t0);

    const bool rosen = opts.stepper == Stepper::rosenbrock;
    const double inv_order = rosen ? 1.0 / 3.0 : 0.2;
    const double grow_cap = rosen ? kGrowCapRos : kGrowCap;
    // Rosenbrock workspace. The Jacobian survives step rejections (only the
    // factorization depends on h) and is refreshed after every accepted move.
    Eigen::MatrixXd jac, w;
    Eigen::VectorXd tdot, r1, r2, r3, f1, f2;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    bool jac_valid = false;
    if (rosen) {
        jac.resize(n, n);
        w.resize(n, n);
        tdot.resize(n);
        r1.resize(n);
        r2.resize(n);
        r3.resize(n);
        f1.resize(n);
        f2.resize(n);
    }

    Trajectory traj;
    double cond = 1.0;
    if (!rhs(t, y, k1, &cond)) {
        throw std::invalid_argument("right-hand side rejected the initial state");
    }
    ++traj.rhs_evals;

    const double eps_width = 1e-10;
    double next_output = opts.output_dt > 0.0 ? grid.t0 + opts.output_dt
                                              : std::numeric_limits<double>::infinity();

    const auto record = [&](double rate) {
        StepRecord rec;
        rec.t = t;
        rec.theta = y;
        rec.total_prob = total_probability(state_of(y));
        rec.rate = rate;
        rec.cond_estimate = cond;
        traj.max_drift_post = std::max(traj.max_drift_post, std::abs(rec.total_prob - 1.0));
        traj.records.push_back(std::move(rec));
    };
    record(rate_of(k1, y));

    std::deque<std::pair<double, double>> rate_window; // (t, rate)

    for (std::size_t step = 0;; ++step) {
        if (t >= grid.t_end) break;
        if (step >= grid.max_steps) {
            throw SolverError("step budget exhausted at t = " + std::to_string(t), t);
        }

        bool clipped = false;
        double h_try = h;
        const double t_target = std::min(next_output, grid.t_end);
        if (t + h_try >= t_target) {
            h_try = t_target - t;
            clipped = true;
        }
        if (h_try < kMinStep) {
            // Rounded output times can leave a sub-floor gap to t_end; that is
            // arrival, not stiffness.
            if (clipped && t_target >= grid.t_end) break;
            const int term = collapsed_term(dim, y, eps_width);
            if (term >= 0) throw WidthCollapseError(t, term, y(term * (dim + 2) + 1));
            throw StiffnessError(t, h_try, 0.0);
        }

        bool stage_ok = true;
        const auto stage = [&](double tc, const Eigen::VectorXd& yc, Eigen::VectorXd& kc) {
            if (!stage_ok) return;
            ++traj.rhs_evals;
            if (!rhs(tc, yc, kc, &cond)) stage_ok = false;
        };

        double err = 0.0;
        if (!rosen) {
            ytmp = y + h_try * (a21 * k1);
            stage(t + c2 * h_try, ytmp, k2);
            if (stage_ok) {
                ytmp = y + h_try * (a31 * k1 + a32 * k2);
                stage(t + c3 * h_try, ytmp, k3);
            }
            if (stage_ok) {
                ytmp = y + h_try * (a41 * k1 + a42 * k2 + a43 * k3);
                stage(t + c4 * h_try, ytmp, k4);
            }
            if (stage_ok) {
                ytmp = y + h_try * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
                stage(t + c5 * h_try, ytmp, k5);
            }
            if (stage_ok) {
                ytmp = y + h_try * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
                stage(t + h_try, ytmp, k6);
            }
            if (stage_ok) {
                ynew = y + h_try * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
                stage(t + h_try, ynew, k7); // FSAL stage doubles as the error stage
            }
            if (stage_ok) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double ei = h_try * (e1 * k1(i) + e3 * k3(i) + e4 * k4(i) +
                                               e5 * k5(i) + e6 * k6(i) + e7 * k7(i));
                    const double scale =
                        grid.atol + grid.rtol * std::max(std::abs(y(i)), std::abs(ynew(i)));
                    const double q = ei / scale;
                    err += q * q;
                }
                err = std::sqrt(err / static_cast<double>(n));
                if (!std::isfinite(err)) stage_ok = false;
            }
        } else {
            if (!jac_valid) {
                for (Eigen::Index j = 0; j < n && stage_ok; ++j) {
                    const double delta = 1.5e-8 * std::max(std::abs(y(j)), 0.1);
                    ytmp = y;
                    ytmp(j) += delta;
                    stage(t, ytmp, f1);
                    if (stage_ok) jac.col(j) = (f1 - k1) / delta;
                }
                if (stage_ok) {
                    const double dt_fd = 1.5e-8 * std::max(std::abs(t), 1.0);
                    stage(t + dt_fd, y, f1);
                    if (stage_ok) tdot = (f1 - k1) / dt_fd;
                }
                jac_valid = stage_ok;
            }
            if (stage_ok) {
                w = (-rd * h_try) * jac;
                w.diagonal().array() += 1.0; // W = I - h d J
                lu.compute(w);
                r1 = lu.solve(k1 + (h_try * rd) * tdot);
                ytmp = y + (0.5 * h_try) * r1;
                stage(t + 0.5 * h_try, ytmp, f1);
            }
            if (stage_ok) {
                r2 = lu.solve(f1 - r1) + r1;
                ynew = y + h_try * r2;
                stage(t + h_try, ynew, f2);
            }
            if (stage_ok) {
                r3 = lu.solve(f2 - re32 * (r2 - f1) - 2.0 * (r1 - k1) +
                              (h_try * rd) * tdot);
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double ei = (h_try / 6.0) * (r1(i) - 2.0 * r2(i) + r3(i));
                    const double scale =
                        grid.atol + grid.rtol * std::max(std::abs(y(i)), std::abs(ynew(i)));
                    const double q = ei / scale;
                    err += q * q;
                }
                err = std::sqrt(err / static_cast<double>(n));
                if (!std::isfinite(err)) stage_ok = false;
            }
        }

        if (opts.fixed_step) {
            if (!stage_ok) {
                const int term = collapsed_term(dim, ynew, eps_width);
                if (term >= 0) throw WidthCollapseError(t, term, ynew(term * (dim + 2) + 1));
                throw StiffnessError(t, h_try, 0.0);
            }
            err = 0.0;
        }

        if (!stage_ok || err > 1.0) {
            ++traj.steps_rejected;
            const double fac =
                stage_ok ? std::max(kShrinkFloor, kSafety * std::pow(err, -inv_order))
                         : kShrinkFloor;
            h = h_try * std::min(fac, 1.0);
            if (h < kMinStep) {
                const int term = stage_ok ? -1 : collapsed_term(dim, ynew, eps_width);
                if (term >= 0) throw WidthCollapseError(t, term, ynew(term * (dim + 2) + 1));
                throw StiffnessError(t, h, 0.0);
            }
            continue;
        }

        // Accepted. Both steppers end with the derivative at the new state:
        // DP5 by the FSAL property, Rosenbrock from its final stage.
        ++traj.steps_accepted;
        t += h_try;
        y.swap(ynew);
        if (rosen) {
            k1.swap(f2);
            jac_valid = false;
        } else {
            k1.swap(k7);
        }

        // Conservation monitoring on the accepted state.
        {
            const MixtureState s = state_of(y);
            const double mass = total_probability(s);
            const double drift = std::abs(mass - 1.0);
            traj.max_drift_pre = std::max(traj.max_drift_pre, drift);
            if (drift > opts.conservation_fail) throw ConservationError(t, drift);
            if (opts.renormalize && drift > opts.renormalize_tol) {
                const double scale = 1.0 / std::sqrt(mass);
                const int block = dim + 2;
                for (Eigen::Index i = 0; i < y.size(); i += block) y(i) *= scale;
                ++traj.renormalizations;
                if (!rhs(t, y, k1, &cond)) {
                    throw SolverError("state invalid after renormalization at t = " +
                                          std::to_string(t), t);
                }
                ++traj.rhs_evals;
            }
        }

        const double rate = rate_of(k1, y);

        const bool at_output = opts.output_dt <= 0.0 || t >= next_output - 1e-12 ||
                               t >= grid.t_end;
        if (at_output) {
            record(rate);
            if (opts.output_dt > 0.0) {
                while (next_output <= t + 1e-12) next_output += opts.output_dt;
            }
        }

        if (opts.equilibrium.enabled) {
            rate_window.emplace_back(t, rate);
            const double t_lo = t - opts.equilibrium.window;
            while (rate_window.size() > 1 && rate_window[1].first <= t_lo) {
                rate_window.pop_front();
            }
            if (rate_window.front().first <= t_lo) {
                bool calm = true;
                for (const auto& [tw, rw] : rate_window) {
                    if (rw >= opts.equilibrium.threshold) { calm = false; break; }
                }
                if (calm) {
                    traj.equilibrium_detected = true;
                    traj.equilibrium_time = t;
                    if (!at_output) record(rate);
                    break;
                }
            }
        }

        if (!opts.fixed_step) {
            const double fac = std::max(
                kShrinkFloor,
                std::min(grow_cap, kSafety * std::pow(std::max(err, 1e-10), -inv_order)));
            // An output-clipped step says nothing about the error at the
            // controller's natural step, so never shrink h because of it.
            h = clipped ? std::max(h, h_try * fac) : h_try * fac;
        }
    }

    if (traj.records.empty() || traj.records.back().t < t) {
        record(rate_of(k1, y));
    }
    return traj;
}

std::optional<double> detect_equilibrium(const Trajectory& traj, double threshold,
                                         double window) {
    const auto& recs = traj.records;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        if (recs[i].rate >= threshold) continue;
        // Find the first record covering a full window from recs[i].
        std::size_t j = i;
        bool calm = true;
        while (j + 1 < recs.size() && recs[j].t < recs[i].t + window) {
            ++j;
            if (recs[j].rate >= threshold) { calm = false; break; }
        }
        if (calm && recs[j].t >= recs[i].t + window) return recs[j].t;
    }
    return std::nullopt;
}

} // namespace ronsfp
