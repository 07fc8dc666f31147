#include "ronsfp/mixture.hpp"
#include "ronsfp/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

using namespace ronsfp;

namespace {

MixtureState random_mixture(std::mt19937_64& rng, int dim, int r) {
    std::uniform_real_distribution<double> amp(0.2, 1.5);
    std::uniform_real_distribution<double> wid(0.4, 2.0);
    std::uniform_real_distribution<double> cen(-2.0, 2.0);
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

TEST_CASE("flatten and unflatten round trip") {
    std::mt19937_64 rng(101);
    for (int rep = 0; rep < 25; ++rep) {
        const int dim = 1 + static_cast<int>(rng() % 8);
        const int r = 1 + static_cast<int>(rng() % 100);
        const MixtureState s = random_mixture(rng, dim, r);
        const std::vector<double> theta = flatten(s);
        REQUIRE(static_cast<int>(theta.size()) == s.n_params());
        const MixtureState back = unflatten(dim, theta);
        CHECK(back.dim == s.dim);
        CHECK(back.amp == s.amp);
        CHECK(back.width == s.width);
        CHECK(back.center == s.center);
        // Block layout: term i occupies (amp, width, center...).
        const int b = dim + 2;
        for (int i = 0; i < r; ++i) {
            CHECK(theta[i * b] == s.amp[i]);
            CHECK(theta[i * b + 1] == s.width[i]);
            for (int ax = 0; ax < dim; ++ax) {
                CHECK(theta[i * b + 2 + ax] == s.center[i * dim + ax]);
            }
        }
    }
}

TEST_CASE("density evaluation matches its definition") {
    std::mt19937_64 rng(103);
    const MixtureState s = random_mixture(rng, 2, 3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 10; ++k) {
        const std::vector<double> x{u(rng), u(rng)};
        double want = 0.0;
        for (int i = 0; i < s.terms(); ++i) {
            double q = 0.0;
            for (int ax = 0; ax < 2; ++ax) {
                const double d = x[ax] - s.center[i * 2 + ax];
                q += d * d;
            }
            want += s.amp[i] * s.amp[i] * std::exp(-q / (s.width[i] * s.width[i]));
        }
        CHECK(evaluate(s, x) == doctest::Approx(want).epsilon(1e-14));
    }
}

TEST_CASE("parameter gradient matches central differences") {
    std::mt19937_64 rng(107);
    for (const int dim : {1, 2, 3, 8}) {
        const int r = 1 + static_cast<int>(rng() % 3);
        const MixtureState s = random_mixture(rng, dim, r);
        std::uniform_real_distribution<double> u(-1.5, 1.5);
        std::vector<double> x(dim);
        for (double& v : x) v = u(rng);

        const std::vector<double> grad = param_gradient(s, x);
        REQUIRE(static_cast<int>(grad.size()) == s.n_params());

        std::vector<double> theta = flatten(s);
        for (int j = 0; j < s.n_params(); ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(theta[j]));
            std::vector<double> tp = theta, tm = theta;
            tp[j] += h;
            tm[j] -= h;
            const double fp = evaluate(unflatten(dim, tp), x);
            const double fm = evaluate(unflatten(dim, tm), x);
            const double fd = (fp - fm) / (2 * h);
            CHECK(std::abs(grad[j] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("closed-form partials as gausspoly objects agree pointwise") {
    std::mt19937_64 rng(109);
    const int dim = 2;
    const MixtureState s = random_mixture(rng, dim, 3);
    const std::vector<GaussPoly> partials = parameter_partials(s);
    REQUIRE(static_cast<int>(partials.size()) == s.n_params());
    // Every partial of term k must carry term k's Gaussian unchanged; that
    // geometric fact is what symbolic assembly leans on.
    const int b = dim + 2;
    for (int j = 0; j < s.n_params(); ++j) {
        const int k = j / b;
        CHECK(partials[j].width_sq == s.width[k] * s.width[k]);
        for (int ax = 0; ax < dim; ++ax) {
            CHECK(partials[j].center[ax] == s.center[k * dim + ax]);
        }
    }
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int rep = 0; rep < 5; ++rep) {
        const std::vector<double> x{u(rng), u(rng)};
        const std::vector<double> grad = param_gradient(s, x);
        for (int j = 0; j < s.n_params(); ++j) {
            CHECK(partials[j].evaluate(x) == doctest::Approx(grad[j]).epsilon(1e-12));
        }
    }
}

TEST_CASE("total probability and its gradient") {
    std::mt19937_64 rng(113);
    for (const int dim : {1, 3}) {
        const MixtureState s = random_mixture(rng, dim, 2);
        double want = 0.0;
        for (int i = 0; i < s.terms(); ++i) {
            want += s.amp[i] * s.amp[i] *
                    std::pow(std::numbers::pi * s.width[i] * s.width[i], dim / 2.0);
        }
        CHECK(total_probability(s) == doctest::Approx(want).epsilon(1e-14));

        // Against the exact gausspoly integral of the density.
        double via_terms = 0.0;
        for (int i = 0; i < s.terms(); ++i) via_terms += integral(term_gausspoly(s, i));
        CHECK(total_probability(s) == doctest::Approx(via_terms).epsilon(1e-13));

        const std::vector<double> g = total_probability_gradient(s);
        std::vector<double> theta = flatten(s);
        const int b = dim + 2;
        for (int j = 0; j < s.n_params(); ++j) {
            if (j % b >= 2) {
                CHECK(g[j] == 0.0); // center shifts never change the mass
                continue;
            }
            const double h = 1e-7 * std::max(1.0, std::abs(theta[j]));
            std::vector<double> tp = theta, tm = theta;
            tp[j] += h;
            tm[j] -= h;
            const double fd =
                (total_probability(unflatten(dim, tp)) -
                 total_probability(unflatten(dim, tm))) / (2 * h);
            CHECK(g[j] == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("normalization rescales amplitudes to unit mass") {
    std::mt19937_64 rng(127);
    MixtureState s = random_mixture(rng, 2, 4);
    const std::vector<double> widths = s.width;
    const std::vector<double> centers = s.center;
    normalize_total_probability(s);
    CHECK(total_probability(s) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.width == widths);
    CHECK(s.center == centers);

    MixtureState zero = s;
    for (double& a : zero.amp) a = 0.0;
    CHECK_THROWS_AS(normalize_total_probability(zero), std::invalid_argument);
}

TEST_CASE("validation rejects inconsistent or degenerate states") {
    MixtureState s;
    s.dim = 1;
    s.amp = {1.0};
    s.width = {1.0};
    s.center = {0.0};
    CHECK_NOTHROW(s.validate());
    CHECK(s.is_usable(1e-10));

    MixtureState bad_width = s;
    bad_width.width[0] = 0.0;
    CHECK_THROWS_AS(bad_width.validate(), std::invalid_argument);
    CHECK_FALSE(bad_width.is_usable(1e-10));

    MixtureState ragged = s;
    ragged.center.push_back(1.0);
    CHECK_THROWS_AS(ragged.validate(), std::invalid_argument);

    MixtureState nonfinite = s;
    nonfinite.amp[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(nonfinite.is_usable(1e-10));
}

TEST_CASE("moments of a single gaussian are its center and width") {
    MixtureState s;
    s.dim = 3;
    s.amp = {0.7};
    s.width = {1.3};
    s.center = {0.5, -1.0, 2.0};
    const MixtureMoments m = mixture_moments(s);
    for (int ax = 0; ax < 3; ++ax) {
        CHECK(m.mean(ax) == doctest::Approx(s.center[ax]).epsilon(1e-14));
        CHECK(m.covariance(ax, ax) ==
              doctest::Approx(s.width[0] * s.width[0] / 2).epsilon(1e-14));
        for (int bx = 0; bx < 3; ++bx) {
            if (ax != bx) CHECK(m.covariance(ax, bx) == doctest::Approx(0.0));
            CHECK(m.second(ax, bx) ==
                  doctest::Approx(m.covariance(ax, bx) + m.mean(ax) * m.mean(bx))
                      .epsilon(1e-13));
        }
    }
}

TEST_CASE("mixture moments match quadrature for a two-term mixture") {
    std::mt19937_64 rng(131);
    const MixtureState s = random_mixture(rng, 2, 2);
    const MixtureMoments m = mixture_moments(s);

    const std::vector<double> lo{-20.0, -20.0}, hi{20.0, 20.0};
    const double mass = integrate_box(
        [&](std::span<const double> x) { return evaluate(s, x); }, lo, hi, 1e-11);
    for (int ax = 0; ax < 2; ++ax) {
        const double mean_ax =
            integrate_box([&](std::span<const double> x) { return x[ax] * evaluate(s, x); },
                          lo, hi, 1e-11) / mass;
        CHECK(m.mean(ax) == doctest::Approx(mean_ax).epsilon(1e-9));
        for (int bx = ax; bx < 2; ++bx) {
            const double sec = integrate_box(
                [&](std::span<const double> x) {
                    return x[ax] * x[bx] * evaluate(s, x);
                }, lo, hi, 1e-11) / mass;
            CHECK(m.second(ax, bx) == doctest::Approx(sec).epsilon(1e-8));
        }
    }
}
