#include "ronsfp/fp_operator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ronsfp {

double CoeffFn::operator()(double t) const {
    switch (kind) {
    case Kind::constant: return p0;
    case Kind::affine: return p0 + p1 * t;
    case Kind::sinusoid: return p0 * (std::sin(p1 * t) + p2);
    }
    return 0.0;
}

void DriftModel::validate() const {
    if (dim < 1 || dim > kMaxDim) {
        throw std::invalid_argument("drift dimension must be in [1, " +
                                    std::to_string(kMaxDim) + "]");
    }
    if (!(nu >= 0.0) || !std::isfinite(nu)) {
        throw std::invalid_argument("diffusion nu must be nonnegative and finite");
    }
    if (static_cast<int>(components.size()) != dim) {
        throw std::invalid_argument("drift component count does not match dimension");
    }
    if (static_cast<int>(axis_diffusion.size()) != dim) {
        throw std::invalid_argument("axis_diffusion size does not match dimension");
    }
    for (double s : axis_diffusion) {
        if (!(s >= 0.0) || !std::isfinite(s)) {
            throw std::invalid_argument("axis_diffusion entries must be nonnegative");
        }
    }
    for (const auto& comp : components) {
        for (const auto& term : comp) {
            for (int ax = dim; ax < kMaxDim; ++ax) {
                if (term.exps[ax] != 0) {
                    throw std::invalid_argument("drift monomial uses axis beyond dimension");
                }
            }
        }
    }
}

int DriftModel::max_degree() const {
    int deg = 0;
    for (const auto& comp : components) {
        for (const auto& term : comp) {
            int d = 0;
            for (int ax = 0; ax < dim; ++ax) d += term.exps[ax];
            deg = std::max(deg, d);
        }
    }
    return deg;
}

std::vector<Poly> DriftModel::components_at(double t) const {
    std::vector<Poly> out;
    out.reserve(dim);
    for (const auto& comp : components) {
        std::vector<Monomial> ms;
        ms.reserve(comp.size());
        for (const auto& term : comp) {
            ms.push_back({term.exps, term.coeff(t)});
        }
        out.push_back(Poly::from_terms(dim, std::move(ms)));
    }
    return out;
}

void DriftModel::evaluate(std::span<const double> x, double t, std::span<double> out) const {
    if (static_cast<int>(x.size()) != dim || static_cast<int>(out.size()) != dim) {
        throw std::invalid_argument("dimension mismatch in DriftModel::evaluate");
    }
    for (int l = 0; l < dim; ++l) {
        double sum = 0.0;
        for (const auto& term : components[l]) {
            double v = term.coeff(t);
            for (int ax = 0; ax < dim; ++ax) {
                for (int k = 0; k < term.exps[ax]; ++k) v *= x[ax];
            }
            sum += v;
        }
        out[l] = sum;
    }
}

double DriftModel::sigma_axis(int axis) const {
    return std::sqrt(2.0 * nu * axis_diffusion[axis]);
}

GaussPolySum apply_fp_operator(const DriftModel& drift, const MixtureState& state, double t) {
    if (drift.dim != state.dim) {
        throw std::invalid_argument("drift and mixture dimension mismatch");
    }
    const int d = drift.dim;
    const std::vector<Poly> F = drift.components_at(t);

    GaussPolySum out;
    out.terms.reserve(state.terms());
    for (int i = 0; i < state.terms(); ++i) {
        const GaussPoly g = term_gausspoly(state, i);
        const double a = g.width_sq;

        Poly acc(d);
        for (int l = 0; l < d; ++l) {
            // d/dx_l of g has polynomial factor (dp - (2/a)(x_l - mu_l) p)
            Poly dg_poly = g.poly.differentiate(l) +
                           (Poly::axis_power(d, l, 1, -2.0 / a) +
                            Poly::constant(d, 2.0 * g.center[l] / a)) * g.poly;
            // -d/dx_l (F_l g) = -(dF_l/dx_l) g - F_l dg
            acc += F[l].differentiate(l) * g.poly * -1.0;
            acc += F[l] * dg_poly * -1.0;
            // nu_l d^2 g / dx_l^2
            const double nu_l = drift.nu_axis(l);
            if (nu_l != 0.0) {
                Poly d2 = dg_poly.differentiate(l) +
                          (Poly::axis_power(d, l, 1, -2.0 / a) +
                           Poly::constant(d, 2.0 * g.center[l] / a)) * dg_poly;
                acc += d2 * nu_l;
            }
        }

        GaussPoly term;
        term.center = g.center;
        term.width_sq = a;
        term.poly = std::move(acc);
        out.terms.push_back(std::move(term));
    }
    return out;
}

double residual(const DriftModel& drift, const MixtureState& state,
                std::span<const double> thetadot, double t, std::span<const double> x) {
    if (static_cast<int>(thetadot.size()) != state.n_params()) {
        throw std::invalid_argument("thetadot length does not match parameter count");
    }
    const std::vector<double> grad = param_gradient(state, x);
    double dt_part = 0.0;
    for (std::size_t j = 0; j < grad.size(); ++j) dt_part += grad[j] * thetadot[j];
    const GaussPolySum lp = apply_fp_operator(drift, state, t);
    return dt_part - lp.evaluate(x);
}

} // namespace ronsfp
