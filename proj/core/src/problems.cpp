#include "ronsfp/problems.hpp"

#include "ronsfp/oracle.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace ronsfp::problems {

namespace {

ExpVec axis_power(int axis, int power) {
    ExpVec e{};
    e[axis] = static_cast<std::uint8_t>(power);
    return e;
}

} // namespace

DriftModel ou_drift(double gamma, double sigma) {
    if (!(gamma > 0.0) || !(sigma > 0.0)) {
        throw std::invalid_argument("linear drift needs gamma, sigma > 0");
    }
    DriftModel m;
    m.dim = 1;
    m.nu = 0.5 * sigma * sigma;
    m.axis_diffusion = {1.0};
    m.components = {{DriftTerm{axis_power(0, 1), CoeffFn::constant(-gamma)}}};
    return m;
}

DriftModel bistable_drift(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    DriftModel m;
    m.dim = 1;
    m.nu = 0.5 * sigma * sigma;
    m.axis_diffusion = {1.0};
    m.components = {{DriftTerm{axis_power(0, 1), CoeffFn::constant(1.0)},
                     DriftTerm{axis_power(0, 3), CoeffFn::constant(-1.0)}}};
    return m;
}

DriftModel duffing_drift(double a1, double a2, double a3, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    DriftModel m;
    m.dim = 2;
    m.nu = 0.5 * sigma * sigma;
    m.axis_diffusion = {0.0, 1.0};
    m.components.resize(2);
    m.components[0] = {DriftTerm{axis_power(1, 1), CoeffFn::constant(1.0)}};
    m.components[1] = {DriftTerm{axis_power(0, 1), CoeffFn::constant(a1)},
                       DriftTerm{axis_power(1, 1), CoeffFn::constant(a2)},
                       DriftTerm{axis_power(0, 3), CoeffFn::constant(a3)}};
    return m;
}

DriftModel harmonic_trap_drift(int dim, double amp, double omega, double offset,
                               double gamma, double nu) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("unsupported dimension");
    if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
    DriftModel m;
    m.dim = dim;
    m.nu = nu;
    m.axis_diffusion.assign(dim, 1.0);
    m.components.resize(dim);
    const double g = gamma / dim;
    for (int l = 0; l < dim; ++l) {
        auto& comp = m.components[l];
        comp.push_back(DriftTerm{ExpVec{}, CoeffFn::sinusoid(amp, omega, offset)});
        comp.push_back(DriftTerm{axis_power(l, 1), CoeffFn::constant(-(1.0 + gamma))});
        for (int j = 0; j < dim; ++j) {
            comp.push_back(DriftTerm{axis_power(j, 1), CoeffFn::constant(g)});
        }
    }
    return m;
}

MixtureState ou_exact_initial(double gamma, double sigma, double t0) {
    const OuExact p = ou_exact_params(gamma, sigma, t0);
    MixtureState state;
    state.dim = 1;
    state.amp = {std::sqrt(p.amplitude)};
    state.width = {p.width};
    state.center = {0.0};
    state.validate();
    return state;
}

MixtureState grouped_initial(int dim, std::span<const InitGroup> groups, double amp,
                             double width, double jitter, std::uint64_t seed) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("unsupported dimension");
    if (!(amp != 0.0) || !(width > 0.0)) {
        throw std::invalid_argument("amplitude must be nonzero and width positive");
    }
    MixtureState state;
    state.dim = dim;
    for (const InitGroup& g : groups) {
        if (g.count < 1) throw std::invalid_argument("group count must be at least 1");
        if (static_cast<int>(g.center.size()) != dim) {
            throw std::invalid_argument("group center dimension mismatch");
        }
        for (int k = 0; k < g.count; ++k) {
            state.amp.push_back(amp);
            state.width.push_back(width);
            state.center.insert(state.center.end(), g.center.begin(), g.center.end());
        }
    }
    const int r = state.terms();
    if (r == 0) throw std::invalid_argument("no mixture terms requested");

    if (jitter > 0.0 && r > 1) {
        std::mt19937_64 rng(seed ^ 0x6a09e667f3bcc908ull);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<double> eta(static_cast<std::size_t>(r) * dim);
        for (double& e : eta) e = gauss(rng);
        // Remove the weighted mean per axis; with equal masses this is the
        // plain mean, and the mixture's first moment stays untouched.
        for (int ax = 0; ax < dim; ++ax) {
            double mean = 0.0;
            for (int i = 0; i < r; ++i) mean += eta[i * dim + ax];
            mean /= r;
            for (int i = 0; i < r; ++i) {
                state.center[i * dim + ax] += jitter * (eta[i * dim + ax] - mean);
            }
        }
    }
    state.validate();
    return state;
}

} // namespace ronsfp::problems
