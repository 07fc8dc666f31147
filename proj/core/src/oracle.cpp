#include "ronsfp/oracle.hpp"

#include "ronsfp/quadrature.hpp"
#include "parallel_util.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace ronsfp {

namespace {

constexpr std::size_t kBlock = 4096;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t block_seed(std::uint64_t master, std::uint64_t block) {
    return splitmix64(splitmix64(master) ^ splitmix64(block + 0x51ed2701ull));
}

} // namespace

std::vector<double> sample_mixture(const MixtureState& init, std::size_t n,
                                   std::uint64_t seed) {
    init.validate();
    const int d = init.dim;
    const int r = init.terms();
    std::vector<double> cum(r);
    double mass = 0.0;
    for (int i = 0; i < r; ++i) {
        mass += init.amp[i] * init.amp[i] *
                std::pow(std::numbers::pi * init.width[i] * init.width[i], 0.5 * d);
        cum[i] = mass;
    }
    if (!(mass > 0.0)) throw std::invalid_argument("mixture mass must be positive to sample");

    std::vector<double> out(n * static_cast<std::size_t>(d));
    std::mt19937_64 rng(splitmix64(seed));
    std::uniform_real_distribution<double> uni(0.0, mass);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t p = 0; p < n; ++p) {
        const double u = uni(rng);
        const int i = static_cast<int>(
            std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
        const int term = std::min(i, r - 1);
        const double sd = init.width[term] / std::numbers::sqrt2; // per-axis variance L^2/2
        const double* c = init.center.data() + static_cast<std::size_t>(term) * d;
        for (int ax = 0; ax < d; ++ax) {
            out[p * d + ax] = c[ax] + sd * gauss(rng);
        }
    }
    return out;
}

std::vector<Snapshot> simulate_sde(const DriftModel& drift, const MixtureState& init,
                                   double t0, std::span<const double> times,
                                   const EnsembleSpec& spec) {
    drift.validate();
    init.validate();
    if (drift.dim != init.dim) throw std::invalid_argument("drift and init dimension mismatch");
    if (times.empty()) throw std::invalid_argument("no snapshot times requested");
    if (!(spec.h > 0.0)) throw std::invalid_argument("SDE step must be positive");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t0 || (i > 0 && times[i] <= times[i - 1])) {
            throw std::invalid_argument("snapshot times must be ascending and >= t0");
        }
    }

    const int d = drift.dim;
    const std::size_t P = spec.particles;
    std::vector<Snapshot> snaps(times.size());
    for (std::size_t s = 0; s < snaps.size(); ++s) {
        snaps[s].t = times[s];
        snaps[s].states.resize(P * static_cast<std::size_t>(d));
    }

    std::array<double, kMaxDim> sigma{};
    bool any_noise = false;
    for (int ax = 0; ax < d; ++ax) {
        sigma[ax] = drift.sigma_axis(ax);
        any_noise = any_noise || sigma[ax] > 0.0;
    }

    const std::size_t n_blocks = (P + kBlock - 1) / kBlock;

    detail::parallel_for(n_blocks, spec.threads, [&](std::size_t b) {
        const std::size_t lo = b * kBlock;
        const std::size_t count = std::min(kBlock, P - lo);
        std::mt19937_64 rng(block_seed(spec.seed, b));
        std::normal_distribution<double> gauss(0.0, 1.0);

        // Initial draw, same procedure as sample_mixture but on the block stream.
        std::vector<double> x(count * static_cast<std::size_t>(d));
        {
            std::vector<double> cum(init.terms());
            double mass = 0.0;
            for (int i = 0; i < init.terms(); ++i) {
                mass += init.amp[i] * init.amp[i] *
                        std::pow(std::numbers::pi * init.width[i] * init.width[i], 0.5 * d);
                cum[i] = mass;
            }
            std::uniform_real_distribution<double> uni(0.0, mass);
            for (std::size_t p = 0; p < count; ++p) {
                const double u = uni(rng);
                const int i = static_cast<int>(
                    std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
                const int term = std::min(i, init.terms() - 1);
                const double sd = init.width[term] / std::numbers::sqrt2;
                const double* c = init.center.data() + static_cast<std::size_t>(term) * d;
                for (int ax = 0; ax < d; ++ax) x[p * d + ax] = c[ax] + sd * gauss(rng);
            }
        }

        std::vector<double> f(d), xpred(d), fpred(d);
        double t = t0;
        for (std::size_t s = 0; s < snaps.size(); ++s) {
            const double span_t = snaps[s].t - t;
            const long steps = span_t > 0.0
                                   ? static_cast<long>(std::ceil(span_t / spec.h - 1e-9))
                                   : 0;
            const double h = steps > 0 ? span_t / static_cast<double>(steps) : 0.0;
            const double sqrt_h = std::sqrt(h);
            const bool corrected = spec.scheme == SdeScheme::predictor_corrector;
            for (long step = 0; step < steps; ++step) {
                const std::vector<Poly> F_now = drift.components_at(t);
                const std::vector<Poly> F_next =
                    corrected ? drift.components_at(t + h) : std::vector<Poly>{};
                for (std::size_t p = 0; p < count; ++p) {
                    double* xp = x.data() + p * d;
                    const std::span<const double> xs(xp, static_cast<std::size_t>(d));
                    for (int ax = 0; ax < d; ++ax) f[ax] = F_now[ax].evaluate(xs);
                    if (spec.scheme == SdeScheme::euler_maruyama) {
                        for (int ax = 0; ax < d; ++ax) {
                            double dx = f[ax] * h;
                            if (sigma[ax] > 0.0) dx += sigma[ax] * sqrt_h * gauss(rng);
                            xp[ax] += dx;
                        }
                    } else {
                        double noise[kMaxDim] = {};
                        if (any_noise) {
                            for (int ax = 0; ax < d; ++ax) {
                                if (sigma[ax] > 0.0) noise[ax] = sigma[ax] * sqrt_h * gauss(rng);
                            }
                        }
                        for (int ax = 0; ax < d; ++ax) {
                            xpred[ax] = xp[ax] + f[ax] * h + noise[ax];
                        }
                        const std::span<const double> xps(xpred.data(),
                                                          static_cast<std::size_t>(d));
                        for (int ax = 0; ax < d; ++ax) fpred[ax] = F_next[ax].evaluate(xps);
                        for (int ax = 0; ax < d; ++ax) {
                            xp[ax] += 0.5 * h * (f[ax] + fpred[ax]) + noise[ax];
                        }
                    }
                }
                t += h;
            }
            t = snaps[s].t;
            std::copy(x.begin(), x.end(),
                      snaps[s].states.begin() + static_cast<std::ptrdiff_t>(lo) * d);
        }
    });

    return snaps;
}

Moments empirical_moments(const Snapshot& snap, int dim) {
    if (dim < 1 || snap.states.empty() || snap.states.size() % dim != 0) {
        throw std::invalid_argument("snapshot storage is not a multiple of dim");
    }
    const std::size_t P = snap.states.size() / dim;

    Moments m;
    m.n = P;
    m.mean = Eigen::VectorXd::Zero(dim);
    m.second = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd sum_prod_sq = Eigen::MatrixXd::Zero(dim, dim);

    for (std::size_t p = 0; p < P; ++p) {
        const double* xp = snap.states.data() + p * dim;
        for (int i = 0; i < dim; ++i) {
            m.mean(i) += xp[i];
            sum_sq(i) += xp[i] * xp[i];
            for (int j = i; j < dim; ++j) {
                const double v = xp[i] * xp[j];
                m.second(i, j) += v;
                sum_prod_sq(i, j) += v * v;
            }
        }
    }
    const double n = static_cast<double>(P);
    m.mean /= n;
    for (int i = 0; i < dim; ++i) {
        for (int j = i; j < dim; ++j) {
            m.second(i, j) /= n;
            m.second(j, i) = m.second(i, j);
            sum_prod_sq(j, i) = sum_prod_sq(i, j);
        }
    }
    m.covariance = m.second - m.mean * m.mean.transpose();

    m.se_mean.resize(dim);
    m.se_second.resize(dim, dim);
    const double denom = n > 1.5 ? n - 1.0 : 1.0;
    for (int i = 0; i < dim; ++i) {
        const double var_i = std::max(0.0, (sum_sq(i) / n - m.mean(i) * m.mean(i)) * n / denom);
        m.se_mean(i) = std::sqrt(var_i / n);
        for (int j = i; j < dim; ++j) {
            const double mean_ij = m.second(i, j);
            const double var_ij =
                std::max(0.0, (sum_prod_sq(i, j) / n - mean_ij * mean_ij) * n / denom);
            m.se_second(i, j) = std::sqrt(var_ij / n);
            m.se_second(j, i) = m.se_second(i, j);
        }
    }
    return m;
}

namespace {

struct MomentStateOps {
    int d;
    const CoeffFn& a;
    double coupling;
    double nu;

    void rhs(double t, const Eigen::VectorXd& mean, const Eigen::MatrixXd& second,
             Eigen::VectorXd& dmean, Eigen::MatrixXd& dsecond) const {
        const double at = a(t);
        const double msum = mean.sum();
        const double g = coupling / d;
        for (int i = 0; i < d; ++i) {
            dmean(i) = at - mean(i) + g * (msum - d * mean(i));
        }
        Eigen::VectorXd rowsum = second.rowwise().sum();
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                double v = at * (mean(i) + mean(j)) - 2.0 * (1.0 + coupling) * second(i, j) +
                           g * (rowsum(j) + rowsum(i));
                if (i == j) v += 2.0 * nu;
                dsecond(i, j) = v;
            }
        }
    }
};

MomentTrajectory moment_run(const MomentStateOps& ops, const Eigen::VectorXd& mean0,
                            const Eigen::MatrixXd& second0, std::span<const double> times,
                            double h_base) {
    const int d = ops.d;
    MomentTrajectory out;
    out.times.assign(times.begin(), times.end());

    Eigen::VectorXd m = mean0, mk(d), m1(d), m2(d), m3(d), m4(d);
    Eigen::MatrixXd S = second0, Sk(d, d), S1(d, d), S2(d, d), S3(d, d), S4(d, d);
    double t = 0.0;

    for (double target : times) {
        const double span_t = target - t;
        const long steps =
            span_t > 0.0 ? static_cast<long>(std::ceil(span_t / h_base - 1e-9)) : 0;
        const double h = steps > 0 ? span_t / static_cast<double>(steps) : 0.0;
        for (long s = 0; s < steps; ++s) {
            ops.rhs(t, m, S, m1, S1);
            mk = m + 0.5 * h * m1;
            Sk = S + 0.5 * h * S1;
            ops.rhs(t + 0.5 * h, mk, Sk, m2, S2);
            mk = m + 0.5 * h * m2;
            Sk = S + 0.5 * h * S2;
            ops.rhs(t + 0.5 * h, mk, Sk, m3, S3);
            mk = m + h * m3;
            Sk = S + h * S3;
            ops.rhs(t + h, mk, Sk, m4, S4);
            m += (h / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
            S += (h / 6.0) * (S1 + 2.0 * S2 + 2.0 * S3 + S4);
            t += h;
        }
        t = target;
        out.mean.push_back(m);
        out.second.push_back(S);
    }
    return out;
}

double moment_diff(const MomentTrajectory& a, const MomentTrajectory& b) {
    double worst = 0.0;
    for (std::size_t s = 0; s < a.times.size(); ++s) {
        const double scale =
            std::max(1.0, std::max(a.mean[s].cwiseAbs().maxCoeff(),
                                   a.second[s].cwiseAbs().maxCoeff()));
        worst = std::max(worst,
                         (a.mean[s] - b.mean[s]).cwiseAbs().maxCoeff() / scale);
        worst = std::max(worst,
                         (a.second[s] - b.second[s]).cwiseAbs().maxCoeff() / scale);
    }
    return worst;
}

} // namespace

MomentTrajectory moment_ode_solve(int dim, const CoeffFn& forcing, double coupling,
                                  double nu, const Eigen::VectorXd& mean0,
                                  const Eigen::MatrixXd& second0,
                                  std::span<const double> times, double rel_tol) {
    if (dim < 1) throw std::invalid_argument("bad dimension");
    if (mean0.size() != dim || second0.rows() != dim || second0.cols() != dim) {
        throw std::invalid_argument("moment initial condition dimension mismatch");
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < 0.0 || (i > 0 && times[i] <= times[i - 1])) {
            throw std::invalid_argument("times must be ascending and nonnegative");
        }
    }
    const MomentStateOps ops{dim, forcing, coupling, nu};

    double h = 1e-2;
    MomentTrajectory coarse = moment_run(ops, mean0, second0, times, h);
    for (int halving = 0; halving < 14; ++halving) {
        MomentTrajectory fine = moment_run(ops, mean0, second0, times, 0.5 * h);
        if (moment_diff(coarse, fine) < rel_tol) return fine;
        coarse = std::move(fine);
        h *= 0.5;
    }
    throw std::runtime_error("moment ODE solve did not reach the requested tolerance");
}

OuExact ou_exact_params(double gamma, double sigma, double t) {
    if (!(gamma > 0.0) || !(sigma > 0.0) || !(t > 0.0)) {
        throw std::invalid_argument("ou_exact_params needs gamma, sigma, t > 0");
    }
    const double s = 1.0 - std::exp(-2.0 * gamma * t);
    OuExact out;
    out.amplitude = std::sqrt(gamma / (std::numbers::pi * sigma * sigma * s));
    out.width = std::sqrt(sigma * sigma * s / gamma);
    return out;
}

EquilibriumRef EquilibriumRef::ou_exact(double gamma, double sigma, double t) {
    const OuExact p = ou_exact_params(gamma, sigma, t);
    EquilibriumRef ref;
    ref.kind_ = Kind::ou_exact;
    ref.dim_ = 1;
    ref.norm_ = p.amplitude;
    ref.p0_ = p.width * p.width;
    return ref;
}

EquilibriumRef EquilibriumRef::bistable(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    const double nu = 0.5 * sigma * sigma;
    EquilibriumRef ref;
    ref.kind_ = Kind::bistable_eq;
    ref.dim_ = 1;
    ref.p0_ = nu;
    const double R = std::max(4.0, std::pow(480.0 * nu, 0.25) + 2.0);
    const double raw = integrate_1d(
        [&](double x) {
            return std::exp(-(0.25 * x * x * x * x - 0.5 * x * x) / nu);
        },
        -R, R, 1e-13);
    ref.norm_ = 1.0 / raw;
    return ref;
}

EquilibriumRef EquilibriumRef::duffing(double a1, double a2, double a3, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (!(a2 < 0.0) || !(a2 * a3 > 0.0)) {
        throw std::invalid_argument("equilibrium requires a2 < 0 and a2 * a3 > 0");
    }
    EquilibriumRef ref;
    ref.kind_ = Kind::duffing_eq;
    ref.dim_ = 2;
    const double s2 = sigma * sigma;
    ref.p0_ = a1;
    ref.p1_ = a2;
    ref.p2_ = a3;
    ref.p3_ = s2;
    const double quart = 0.5 * a2 * a3 / s2; // coefficient of -x^4
    const double Rx = std::pow(60.0 / quart, 0.25) + 2.0;
    const double ix = integrate_1d(
        [&](double x) {
            const double x2 = x * x;
            return std::exp((-a1 * a2 * x2 - 0.5 * a2 * a3 * x2 * x2) / s2);
        },
        -Rx, Rx, 1e-13);
    const double iy = std::sqrt(std::numbers::pi * s2 / -a2); // exact Gaussian in y
    ref.norm_ = 1.0 / (ix * iy);
    return ref;
}

double EquilibriumRef::density(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim_) {
        throw std::invalid_argument("point dimension mismatch in EquilibriumRef::density");
    }
    switch (kind_) {
    case Kind::ou_exact:
        return norm_ * std::exp(-x[0] * x[0] / p0_);
    case Kind::bistable_eq: {
        const double x2 = x[0] * x[0];
        return norm_ * std::exp(-(0.25 * x2 * x2 - 0.5 * x2) / p0_);
    }
    case Kind::duffing_eq: {
        const double x2 = x[0] * x[0];
        const double q = (-p0_ * p1_ * x2 - 0.5 * p1_ * p2_ * x2 * x2 + p1_ * x[1] * x[1]) / p3_;
        return norm_ * std::exp(q);
    }
    }
    return 0.0;
}

double l2_relative_error(const std::function<double(std::span<const double>)>& a,
                         const std::function<double(std::span<const double>)>& b,
                         std::span<const double> lo, std::span<const double> hi,
                         double rel_tol) {
    const double num = integrate_box(
        [&](std::span<const double> x) {
            const double d = a(x) - b(x);
            return d * d;
        },
        lo, hi, rel_tol);
    const double den = integrate_box(
        [&](std::span<const double> x) {
            const double v = b(x);
            return v * v;
        },
        lo, hi, rel_tol);
    if (!(den > 0.0)) throw std::invalid_argument("reference has zero norm on the box");
    return std::sqrt(num / den);
}

double l2_relative_error_mc(const std::function<double(std::span<const double>)>& a,
                            const std::function<double(std::span<const double>)>& b,
                            std::span<const double> lo, std::span<const double> hi,
                            std::size_t samples, std::uint64_t seed) {
    const int d = static_cast<int>(lo.size());
    if (static_cast<int>(hi.size()) != d) throw std::invalid_argument("box dimension mismatch");
    if (samples == 0) throw std::invalid_argument("need at least one sample");
    std::mt19937_64 rng(splitmix64(seed));
    std::vector<double> x(d);
    double num = 0.0, den = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        for (int ax = 0; ax < d; ++ax) {
            std::uniform_real_distribution<double> u(lo[ax], hi[ax]);
            x[ax] = u(rng);
        }
        const std::span<const double> xs(x.data(), x.size());
        const double diff = a(xs) - b(xs);
        const double ref = b(xs);
        num += diff * diff;
        den += ref * ref;
    }
    if (!(den > 0.0)) throw std::invalid_argument("reference has zero norm on the box");
    return std::sqrt(num / den);
}

} // namespace ronsfp
