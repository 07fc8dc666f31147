#include "ronsfp/oracle.hpp"
#include "ronsfp/problems.hpp"
#include "ronsfp/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace ronsfp;

namespace {

MixtureState near_point_mass(double center, double width = 1e-3) {
    MixtureState s;
    s.dim = 1;
    s.amp = {1.0};
    s.width = {width};
    s.center = {center};
    normalize_total_probability(s);
    return s;
}

/// F = -x with no noise, for exercising the deterministic part of a scheme.
DriftModel pure_decay() {
    DriftModel d;
    d.dim = 1;
    d.nu = 0.0;
    d.axis_diffusion = {1.0};
    DriftTerm lin;
    lin.exps[0] = 1;
    lin.coeff = CoeffFn::constant(-1.0);
    d.components = {{lin}};
    d.validate();
    return d;
}

} // namespace

TEST_CASE("mixture sampling reproduces the mixture moments") {
    MixtureState s;
    s.dim = 2;
    s.amp = {0.8, 0.5};
    s.width = {1.2, 0.7};
    s.center = {-1.0, 0.5, 1.5, -0.25};

    const std::size_t n = 200'000;
    Snapshot snap;
    snap.t = 0.0;
    snap.states = sample_mixture(s, n, 12345);
    const Moments m = empirical_moments(snap, 2);
    const MixtureMoments ref = mixture_moments(s);

    for (int ax = 0; ax < 2; ++ax) {
        CHECK(std::abs(m.mean(ax) - ref.mean(ax)) <= 3.5 * m.se_mean(ax));
        for (int bx = ax; bx < 2; ++bx) {
            CHECK(std::abs(m.second(ax, bx) - ref.second(ax, bx)) <=
                  3.5 * m.se_second(ax, bx));
        }
    }
}

TEST_CASE("linear-drift ensemble variance matches the closed form at t = 5") {
    const double gamma = 1.0, sigma = 1.0;
    const DriftModel drift = problems::ou_drift(gamma, sigma);
    const MixtureState init = near_point_mass(0.0);

    EnsembleSpec spec;
    spec.particles = 20'000;
    spec.h = 2e-3;
    spec.seed = 99;
    spec.threads = 2;
    const std::vector<double> times{5.0};
    const std::vector<Snapshot> snaps = simulate_sde(drift, init, 0.0, times, spec);
    REQUIRE(snaps.size() == 1);
    const Moments m = empirical_moments(snaps[0], 1);

    const double v0 = init.width[0] * init.width[0] / 2;
    const double want = sigma * sigma * (1 - std::exp(-2 * gamma * 5.0)) / (2 * gamma) +
                        v0 * std::exp(-2 * gamma * 5.0);
    CHECK(want == doctest::Approx(0.4999773).epsilon(1e-4));
    const double got = m.covariance(0, 0);
    const double se_var = got * std::sqrt(2.0 / (static_cast<double>(m.n) - 1));
    CHECK(std::abs(got - want) <= 3 * se_var + 3 * spec.h * want);
    CHECK(std::abs(m.mean(0)) <= 3.5 * m.se_mean(0));
}

TEST_CASE("zero noise reduces the ensemble to the deterministic flow") {
    const DriftModel drift = pure_decay();
    const MixtureState init = near_point_mass(1.0, 0.5);

    EnsembleSpec spec;
    spec.particles = 1'000;
    spec.h = 1e-3;
    spec.seed = 7;
    const std::vector<double> times{0.0, 1.0};
    const std::vector<Snapshot> snaps = simulate_sde(drift, init, 0.0, times, spec);
    REQUIRE(snaps.size() == 2);
    // Euler with F = -x is the exact map x -> x (1 - h) each step.
    const double factor = std::pow(1.0 - spec.h, 1000.0);
    for (std::size_t i = 0; i < spec.particles; ++i) {
        CHECK(snaps[1].states[i] ==
              doctest::Approx(snaps[0].states[i] * factor).epsilon(1e-9));
    }
}

TEST_CASE("predictor-corrector with zero noise is the trapezoidal map") {
    const DriftModel drift = pure_decay();
    const MixtureState init = near_point_mass(1.0, 0.5);

    EnsembleSpec spec;
    spec.particles = 64;
    spec.h = 0.1;
    spec.seed = 7;
    spec.scheme = SdeScheme::predictor_corrector;
    const std::vector<double> times{0.0, 0.1};
    const std::vector<Snapshot> snaps = simulate_sde(drift, init, 0.0, times, spec);
    const double factor = 1.0 - spec.h + spec.h * spec.h / 2;
    for (std::size_t i = 0; i < spec.particles; ++i) {
        CHECK(snaps[1].states[i] ==
              doctest::Approx(snaps[0].states[i] * factor).epsilon(1e-12));
    }
}

TEST_CASE("ensemble results do not depend on the thread count") {
    const DriftModel drift = problems::bistable_drift(0.5);
    MixtureState init;
    init.dim = 1;
    init.amp = {0.6, 0.6};
    init.width = {0.8, 0.8};
    init.center = {-1.0, 1.0};
    normalize_total_probability(init);

    EnsembleSpec a;
    a.particles = 5'000;
    a.h = 1e-3;
    a.seed = 31;
    a.threads = 1;
    EnsembleSpec b = a;
    b.threads = 4;

    const std::vector<double> times{0.5};
    const auto sa = simulate_sde(drift, init, 0.0, times, a);
    const auto sb = simulate_sde(drift, init, 0.0, times, b);
    REQUIRE(sa[0].states.size() == sb[0].states.size());
    for (std::size_t i = 0; i < sa[0].states.size(); ++i) {
        CHECK(sa[0].states[i] == sb[0].states[i]);
    }
}

TEST_CASE("symmetric double-well ensemble splits evenly between the wells") {
    const DriftModel drift = problems::bistable_drift(0.5);
    MixtureState init;
    init.dim = 1;
    init.amp = {0.6, 0.6};
    init.width = {0.8, 0.8};
    init.center = {-1.0, 1.0};
    normalize_total_probability(init);

    EnsembleSpec spec;
    spec.particles = 20'000;
    spec.h = 1e-3;
    spec.seed = 41;
    spec.threads = 2;
    const std::vector<double> times{2.0};
    const auto snaps = simulate_sde(drift, init, 0.0, times, spec);
    std::size_t right = 0;
    for (double x : snaps[0].states) right += x > 0.0;
    const double frac = static_cast<double>(right) / static_cast<double>(spec.particles);
    const double se = std::sqrt(0.25 / static_cast<double>(spec.particles));
    CHECK(std::abs(frac - 0.5) <= 3 * se);
}

TEST_CASE("a single particle yields its own mean and zero spread") {
    Snapshot snap;
    snap.t = 0.0;
    snap.states = {0.7, -0.2};
    const Moments m = empirical_moments(snap, 2);
    CHECK(m.n == 1);
    CHECK(m.mean(0) == 0.7);
    CHECK(m.mean(1) == -0.2);
    CHECK(m.covariance.cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.se_mean.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("euler scheme has first-order weak bias in the mean") {
    // For F = -x the Euler mean after t/h steps is (1 - h)^(t/h); halving h
    // must roughly halve the gap to exp(-t). Noise is kept small so the
    // statistical error stays well under the bias being measured.
    const DriftModel drift = problems::ou_drift(1.0, 0.05);
    const MixtureState init = near_point_mass(1.0);
    const double exact = std::exp(-1.0);

    auto mean_at = [&](double h, std::uint64_t seed) {
        EnsembleSpec spec;
        spec.particles = 50'000;
        spec.h = h;
        spec.seed = seed;
        spec.threads = 2;
        const std::vector<double> times{1.0};
        const auto snaps = simulate_sde(drift, init, 0.0, times, spec);
        return empirical_moments(snaps[0], 1).mean(0);
    };
    const double bias1 = mean_at(0.1, 5) - exact;
    const double bias2 = mean_at(0.05, 5) - exact;
    CHECK(bias1 < 0);
    CHECK(bias2 < 0);
    const double ratio = bias1 / bias2;
    CHECK(ratio >= 1.6);
    CHECK(ratio <= 2.5);
}

TEST_CASE("moment system in one dimension matches its closed form") {
    // F = a - x regardless of the coupling when dim = 1, so
    // m(t) = a + (m0 - a) e^-t and V(t) = nu + (V0 - nu) e^-2t.
    const double a = 0.7, nu = 0.3, m0 = 0.2, V0 = 0.5;
    Eigen::VectorXd mean0(1);
    mean0 << m0;
    Eigen::MatrixXd second0(1, 1);
    second0 << V0 + m0 * m0;

    const std::vector<double> times{0.3, 1.0, 2.5};
    const MomentTrajectory traj = moment_ode_solve(1, CoeffFn::constant(a), 0.4, nu,
                                                   mean0, second0, times, 1e-12);
    REQUIRE(traj.times.size() == 3);
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        const double m = a + (m0 - a) * std::exp(-t);
        const double V = nu + (V0 - nu) * std::exp(-2 * t);
        CHECK(traj.mean[k](0) == doctest::Approx(m).epsilon(1e-10));
        CHECK(traj.second[k](0, 0) == doctest::Approx(V + m * m).epsilon(1e-10));
    }

    // The closed-form fixed point stays put.
    mean0 << a;
    second0 << nu + a * a;
    const MomentTrajectory fp = moment_ode_solve(1, CoeffFn::constant(a), 0.4, nu,
                                                 mean0, second0, times, 1e-12);
    for (std::size_t k = 0; k < times.size(); ++k) {
        CHECK(fp.mean[k](0) == doctest::Approx(a).epsilon(1e-10));
        CHECK(fp.second[k](0, 0) == doctest::Approx(nu + a * a).epsilon(1e-10));
    }
}

TEST_CASE("moment system commutes with particle relabeling") {
    const int d = 3;
    Eigen::VectorXd mean0(d);
    mean0 << 0.5, -0.3, 0.8;
    Eigen::MatrixXd cov0(d, d);
    cov0 << 0.40, 0.05, -0.02, 0.05, 0.30, 0.04, -0.02, 0.04, 0.50;
    const Eigen::MatrixXd second0 = cov0 + mean0 * mean0.transpose();

    Eigen::PermutationMatrix<Eigen::Dynamic> perm(d);
    perm.indices() << 2, 0, 1;
    const Eigen::MatrixXd P = perm.toDenseMatrix().cast<double>();

    const std::vector<double> times{0.8};
    const CoeffFn a = CoeffFn::sinusoid(1.25, std::numbers::pi, 1.5);
    const MomentTrajectory base =
        moment_ode_solve(d, a, 0.25, 0.01, mean0, second0, times, 1e-12);
    const MomentTrajectory permuted = moment_ode_solve(
        d, a, 0.25, 0.01, P * mean0, P * second0 * P.transpose(), times, 1e-12);

    CHECK((permuted.mean[0] - P * base.mean[0]).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((permuted.second[0] - P * base.second[0] * P.transpose())
              .cwiseAbs()
              .maxCoeff() <= 1e-10);
}

TEST_CASE("moment system agrees with a particle ensemble of the trap") {
    const int d = 3;
    const double gamma = 0.25, nu = 0.01;
    const DriftModel drift =
        problems::harmonic_trap_drift(d, 1.25, std::numbers::pi, 1.5, gamma, nu);

    MixtureState init;
    init.dim = d;
    init.amp = {1.0};
    init.width = {std::sqrt(0.2)};
    init.center = {0.0, 1.0, 2.0};
    normalize_total_probability(init);

    EnsembleSpec spec;
    spec.particles = 10'000;
    spec.h = 1e-3;
    spec.seed = 77;
    spec.threads = 2;
    const std::vector<double> times{1.0};
    const auto snaps = simulate_sde(drift, init, 0.0, times, spec);
    const Moments mc = empirical_moments(snaps[0], d);

    const MixtureMoments m0 = mixture_moments(init);
    const MomentTrajectory ode = moment_ode_solve(
        d, CoeffFn::sinusoid(1.25, std::numbers::pi, 1.5), gamma, nu, m0.mean,
        m0.second, times, 1e-12);

    for (int i = 0; i < d; ++i) {
        CHECK(std::abs(mc.mean(i) - ode.mean[0](i)) <=
              3.5 * mc.se_mean(i) + 2 * spec.h);
        for (int j = i; j < d; ++j) {
            CHECK(std::abs(mc.second(i, j) - ode.second[0](i, j)) <=
                  3.5 * mc.se_second(i, j) + 2 * spec.h);
        }
    }
}

TEST_CASE("point-source solution parameters") {
    // Mass one at every time, variance matching the independently solved
    // moment system, and the long-time width sigma / sqrt(gamma).
    const OuExact mid = ou_exact_params(1.0, 0.8, 0.7);
    CHECK(mid.amplitude * std::sqrt(std::numbers::pi) * mid.width ==
          doctest::Approx(1.0).epsilon(1e-12));

    Eigen::VectorXd mean0 = Eigen::VectorXd::Zero(1);
    Eigen::MatrixXd second0 = Eigen::MatrixXd::Zero(1, 1);
    const std::vector<double> times{0.7};
    const MomentTrajectory ode = moment_ode_solve(
        1, CoeffFn::constant(0.0), 0.0, 0.32, mean0, second0, times, 1e-12);
    CHECK(mid.width * mid.width / 2 ==
          doctest::Approx(ode.second[0](0, 0)).epsilon(1e-9));

    const OuExact late = ou_exact_params(2.0, 1.5, 50.0);
    CHECK(late.width == doctest::Approx(1.5 / std::sqrt(2.0)).epsilon(1e-10));

    // The mixture-state form carries the same numbers with mass exactly one.
    const MixtureState s = problems::ou_exact_initial(1.0, 0.8, 0.7);
    CHECK(s.amp[0] * s.amp[0] == doctest::Approx(mid.amplitude).epsilon(1e-13));
    CHECK(s.width[0] == doctest::Approx(mid.width).epsilon(1e-13));
    CHECK(total_probability(s) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("reference equilibria are normalized and peak where they should") {
    SUBCASE("double well") {
        const EquilibriumRef ref = EquilibriumRef::bistable(0.5);
        const double mass = integrate_1d(
            [&](double x) {
                const double xv[1] = {x};
                return ref.density(std::span<const double>(xv, 1));
            },
            -6.0, 6.0, 1e-12);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
        auto at = [&](double x) {
            const double xv[1] = {x};
            return ref.density(std::span<const double>(xv, 1));
        };
        CHECK(at(1.0) > at(0.85));
        CHECK(at(1.0) > at(1.15));
        CHECK(at(1.0) > at(0.0));
        CHECK(at(0.4) == doctest::Approx(at(-0.4)).epsilon(1e-12));
    }
    SUBCASE("noisy oscillator") {
        const EquilibriumRef ref = EquilibriumRef::duffing(1.0, -0.2, -1.0, 0.5);
        CHECK(ref.dim() == 2);
        // The y marginal is a Gaussian with sigma about 0.79, so the box must
        // reach past six of those sigmas for the mass check at 1e-8.
        const std::vector<double> lo{-6.0, -6.0}, hi{6.0, 6.0};
        const double mass = integrate_box(
            [&](std::span<const double> x) { return ref.density(x); }, lo, hi, 1e-10);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
        auto at = [&](double x, double y) {
            const double xv[2] = {x, y};
            return ref.density(std::span<const double>(xv, 2));
        };
        CHECK(at(1.0, 0.0) > at(0.8, 0.0));
        CHECK(at(1.0, 0.0) > at(1.2, 0.0));
        CHECK(at(1.0, 0.0) > at(1.0, 0.2));
        CHECK(at(1.0, 0.0) > at(1.0, -0.2));
        CHECK(at(-1.0, 0.0) == doctest::Approx(at(1.0, 0.0)).epsilon(1e-12));
        CHECK(at(0.0, 0.0) < at(1.0, 0.0));
    }
    SUBCASE("linear drift at finite time") {
        const EquilibriumRef ref = EquilibriumRef::ou_exact(1.0, 1.0, 0.5);
        const double mass = integrate_1d(
            [&](double x) {
                const double xv[1] = {x};
                return ref.density(std::span<const double>(xv, 1));
            },
            -8.0, 8.0, 1e-12);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("relative error norms") {
    const std::vector<double> lo{-3.0}, hi{3.0};
    auto f = [](std::span<const double> x) { return std::exp(-x[0] * x[0]); };
    auto twice = [&](std::span<const double> x) { return 2 * f(x); };

    CHECK(l2_relative_error(f, f, lo, hi) <= 1e-12);
    CHECK(l2_relative_error(twice, f, lo, hi) == doctest::Approx(1.0).epsilon(1e-8));

    const double mc = l2_relative_error_mc(twice, f, lo, hi, 200'000, 4242);
    CHECK(mc == doctest::Approx(1.0).epsilon(0.05));
}
