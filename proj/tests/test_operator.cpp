#include "ronsfp/fp_operator.hpp"
#include "ronsfp/problems.hpp"
#include "ronsfp/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace ronsfp;

namespace {

/// (L p)(x) by finite differences of the divergence and Laplacian terms:
/// L p = -sum_l d/dx_l (F_l p) + sum_l nu_l d^2p/dx_l^2.
double fd_operator(const DriftModel& drift, const MixtureState& s, double t,
                   std::span<const double> x0) {
    const int d = drift.dim;
    const double h = 1e-5;
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> f(d);
    double out = 0.0;
    for (int l = 0; l < d; ++l) {
        const auto flux = [&](double xl) {
            x[l] = xl;
            drift.evaluate(x, t, f);
            const double v = f[l] * evaluate(s, x);
            x[l] = x0[l];
            return v;
        };
        out -= (flux(x0[l] + h) - flux(x0[l] - h)) / (2 * h);

        const auto dens = [&](double xl) {
            x[l] = xl;
            const double v = evaluate(s, x);
            x[l] = x0[l];
            return v;
        };
        out += drift.nu_axis(l) *
               (dens(x0[l] + h) - 2 * dens(x0[l]) + dens(x0[l] - h)) / (h * h);
    }
    return out;
}

MixtureState random_mixture(std::mt19937_64& rng, int dim, int r) {
    std::uniform_real_distribution<double> amp(0.3, 1.2);
    std::uniform_real_distribution<double> wid(0.6, 1.8);
    std::uniform_real_distribution<double> cen(-1.5, 1.5);
    MixtureState s;
    s.dim = dim;
    for (int i = 0; i < r; ++i) {
        s.amp.push_back(amp(rng));
        s.width.push_back(wid(rng));
        for (int ax = 0; ax < dim; ++ax) s.center.push_back(cen(rng));
    }
    return s;
}

} // namespace

TEST_CASE("time-dependent coefficients evaluate as declared") {
    CHECK(CoeffFn::constant(2.5)(17.0) == 2.5);
    CHECK(CoeffFn::affine(1.0, -0.5)(4.0) == doctest::Approx(-1.0));
    const CoeffFn a = CoeffFn::sinusoid(1.25, std::numbers::pi, 1.5);
    CHECK(a(0.0) == doctest::Approx(1.25 * 1.5));
    CHECK(a(0.5) == doctest::Approx(1.25 * (std::sin(std::numbers::pi * 0.5) + 1.5)));
}

TEST_CASE("drift models validate their shape") {
    DriftModel m = problems::bistable_drift(0.5);
    CHECK_NOTHROW(m.validate());
    CHECK(m.dim == 1);
    CHECK(m.nu == doctest::Approx(0.125));
    CHECK(m.max_degree() == 3);

    DriftModel bad = m;
    bad.nu = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    DriftModel ragged = m;
    ragged.axis_diffusion.push_back(1.0);
    CHECK_THROWS_AS(ragged.validate(), std::invalid_argument);
}

TEST_CASE("benchmark drifts evaluate to their defining fields") {
    std::mt19937_64 rng(211);
    std::uniform_real_distribution<double> u(-2.0, 2.0);

    const DriftModel ou = problems::ou_drift(1.3, 0.8);
    const DriftModel bi = problems::bistable_drift(0.5);
    const DriftModel du = problems::duffing_drift(1.0, -0.2, -1.0, 1.0 / std::sqrt(20.0));
    const DriftModel ht = problems::harmonic_trap_drift(4, 1.25, std::numbers::pi, 1.5,
                                                        0.25, 0.01);
    CHECK(du.axis_diffusion[0] == 0.0);
    CHECK(du.axis_diffusion[1] == 1.0);
    CHECK(du.sigma_axis(1) == doctest::Approx(1.0 / std::sqrt(20.0)).epsilon(1e-14));

    for (int rep = 0; rep < 8; ++rep) {
        const double t = rep * 0.37;
        {
            const double x = u(rng);
            double f = 0.0;
            ou.evaluate(std::vector<double>{x}, t, std::span<double>(&f, 1));
            CHECK(f == doctest::Approx(-1.3 * x).epsilon(1e-14));
            bi.evaluate(std::vector<double>{x}, t, std::span<double>(&f, 1));
            CHECK(f == doctest::Approx(x - x * x * x).epsilon(1e-13));
        }
        {
            const std::vector<double> x{u(rng), u(rng)};
            std::vector<double> f(2);
            du.evaluate(x, t, f);
            CHECK(f[0] == doctest::Approx(x[1]).epsilon(1e-14));
            CHECK(f[1] ==
                  doctest::Approx(x[0] - 0.2 * x[1] - x[0] * x[0] * x[0]).epsilon(1e-13));
        }
        {
            std::vector<double> x(4);
            for (double& v : x) v = u(rng);
            std::vector<double> f(4);
            ht.evaluate(x, t, f);
            const double a = 1.25 * (std::sin(std::numbers::pi * t) + 1.5);
            double sum = 0.0;
            for (double v : x) sum += v;
            for (int l = 0; l < 4; ++l) {
                const double want = a - 1.25 * x[l] + (0.25 / 4) * sum;
                CHECK(f[l] == doctest::Approx(want).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("operator image keeps one gausspoly per mixture term") {
    std::mt19937_64 rng(223);
    const DriftModel drift = problems::duffing_drift(1.0, -0.2, -1.0, 0.3);
    const MixtureState s = random_mixture(rng, 2, 5);
    const GaussPolySum lp = apply_fp_operator(drift, s, 0.0);
    REQUIRE(lp.terms.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(lp.terms[i].width_sq == s.width[i] * s.width[i]);
        for (int ax = 0; ax < 2; ++ax) {
            CHECK(lp.terms[i].center[ax] == s.center[i * 2 + ax]);
        }
        // Degree grows by at most drift degree + 1 over the term's own poly.
        CHECK(lp.terms[i].poly.total_degree() <= drift.max_degree() + 1 + 2);
    }
}

TEST_CASE("heat equation: zero drift reduces the operator to the laplacian") {
    DriftModel heat;
    heat.dim = 2;
    heat.nu = 0.7;
    heat.axis_diffusion = {1.0, 1.0};
    heat.components.resize(2);
    heat.validate();

    std::mt19937_64 rng(227);
    const MixtureState s = random_mixture(rng, 2, 2);
    const GaussPolySum lp = apply_fp_operator(heat, s, 0.0);

    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int rep = 0; rep < 10; ++rep) {
        const std::vector<double> x{u(rng), u(rng)};
        // Exact laplacian of each isotropic gaussian term.
        double want = 0.0;
        for (int i = 0; i < s.terms(); ++i) {
            const double L2 = s.width[i] * s.width[i];
            double q = 0.0;
            for (int ax = 0; ax < 2; ++ax) {
                const double d = x[ax] - s.center[i * 2 + ax];
                q += d * d;
            }
            const double p = s.amp[i] * s.amp[i] * std::exp(-q / L2);
            want += heat.nu * p * (4 * q / (L2 * L2) - 4 / L2);
        }
        CHECK(lp.evaluate(x) == doctest::Approx(want).epsilon(1e-11));
    }
}

TEST_CASE("operator image matches finite differences across problems") {
    std::mt19937_64 rng(229);
    std::uniform_real_distribution<double> u(-1.5, 1.5);

    const DriftModel models[] = {
        problems::ou_drift(1.0, 1.0),
        problems::bistable_drift(0.5),
        problems::duffing_drift(1.0, -0.2, -1.0, 1.0 / std::sqrt(20.0)),
        problems::harmonic_trap_drift(3, 1.25, std::numbers::pi, 1.5, 0.25, 0.01),
    };
    for (const DriftModel& drift : models) {
        const MixtureState s = random_mixture(rng, drift.dim, 2);
        const double t = 0.4;
        const GaussPolySum lp = apply_fp_operator(drift, s, t);
        for (int rep = 0; rep < 6; ++rep) {
            std::vector<double> x(drift.dim);
            for (double& v : x) v = u(rng);
            const double sym = lp.evaluate(x);
            const double fd = fd_operator(drift, s, t, x);
            CHECK(std::abs(sym - fd) <= 2e-5 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("operator image carries zero net mass") {
    std::mt19937_64 rng(233);
    const DriftModel models[] = {
        problems::bistable_drift(0.5),
        problems::duffing_drift(1.0, -0.2, -1.0, 0.3),
    };
    for (const DriftModel& drift : models) {
        for (int rep = 0; rep < 5; ++rep) {
            const MixtureState s = random_mixture(rng, drift.dim, 3);
            const GaussPolySum lp = apply_fp_operator(drift, s, 0.1 * rep);
            // The flux form integrates to zero exactly; only rounding remains.
            CHECK(std::abs(lp.integral()) <= 1e-11);
        }
    }
}

TEST_CASE("stationary gaussian of the linear drift is annihilated") {
    // For dX = -gamma X dt + sigma dW the density with width^2 = sigma^2/gamma
    // and unit mass is stationary, so L p vanishes identically.
    const double gamma = 1.4, sigma = 0.9;
    const DriftModel drift = problems::ou_drift(gamma, sigma);
    MixtureState s;
    s.dim = 1;
    const double w2 = sigma * sigma / gamma;
    s.width = {std::sqrt(w2)};
    s.amp = {std::pow(std::numbers::pi * w2, -0.25)};
    s.center = {0.0};
    const GaussPolySum lp = apply_fp_operator(drift, s, 0.0);
    for (double x : {-2.0, -0.5, 0.0, 0.3, 1.7}) {
        CHECK(std::abs(lp.evaluate(std::vector<double>{x})) <= 1e-13);
    }
}

TEST_CASE("residual is linear in the parameter velocity") {
    std::mt19937_64 rng(239);
    const DriftModel drift = problems::bistable_drift(0.5);
    const MixtureState s = random_mixture(rng, 1, 3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(s.n_params());
    for (double& e : v) e = u(rng);

    const std::vector<double> x{0.7};
    const std::vector<double> grad = param_gradient(s, x);
    const GaussPolySum lp = apply_fp_operator(drift, s, 0.0);
    double want = -lp.evaluate(x);
    for (int j = 0; j < s.n_params(); ++j) want += grad[j] * v[j];
    CHECK(residual(drift, s, v, 0.0, x) == doctest::Approx(want).epsilon(1e-12));

    const std::vector<double> zero(s.n_params(), 0.0);
    CHECK(residual(drift, s, zero, 0.0, x) == doctest::Approx(-lp.evaluate(x)));
}
