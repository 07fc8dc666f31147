#include "ronsfp/mixture.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ronsfp {

void MixtureState::validate() const {
    if (dim < 1 || dim > kMaxDim) {
        throw std::invalid_argument("mixture dimension must be in [1, " +
                                    std::to_string(kMaxDim) + "]");
    }
    if (amp.empty()) throw std::invalid_argument("mixture needs at least one term");
    if (width.size() != amp.size()) {
        throw std::invalid_argument("width count does not match amplitude count");
    }
    if (center.size() != amp.size() * static_cast<std::size_t>(dim)) {
        throw std::invalid_argument("center storage does not match terms x dim");
    }
    for (std::size_t i = 0; i < width.size(); ++i) {
        if (!(width[i] > 0.0) || !std::isfinite(width[i])) {
            throw std::invalid_argument("width of term " + std::to_string(i) +
                                        " must be positive and finite, got " +
                                        std::to_string(width[i]));
        }
        if (!std::isfinite(amp[i])) {
            throw std::invalid_argument("amplitude of term " + std::to_string(i) +
                                        " is not finite");
        }
    }
    for (double c : center) {
        if (!std::isfinite(c)) throw std::invalid_argument("center entry is not finite");
    }
}

bool MixtureState::is_usable(double min_width) const {
    if (dim < 1 || dim > kMaxDim || amp.empty()) return false;
    if (width.size() != amp.size()) return false;
    if (center.size() != amp.size() * static_cast<std::size_t>(dim)) return false;
    for (std::size_t i = 0; i < width.size(); ++i) {
        if (!(width[i] > min_width) || !std::isfinite(width[i])) return false;
        if (!std::isfinite(amp[i])) return false;
    }
    for (double c : center) {
        if (!std::isfinite(c)) return false;
    }
    return true;
}

namespace {

void check_point(const MixtureState& state, std::span<const double> x) {
    if (static_cast<int>(x.size()) != state.dim) {
        throw std::invalid_argument("point dimension " + std::to_string(x.size()) +
                                    " does not match mixture dimension " +
                                    std::to_string(state.dim));
    }
}

} // namespace

double evaluate(const MixtureState& state, std::span<const double> x) {
    check_point(state, x);
    double sum = 0.0;
    for (int i = 0; i < state.terms(); ++i) {
        const double* c = state.center.data() + static_cast<std::size_t>(i) * state.dim;
        double q = 0.0;
        for (int ax = 0; ax < state.dim; ++ax) {
            const double dx = x[ax] - c[ax];
            q += dx * dx;
        }
        sum += state.amp[i] * state.amp[i] * std::exp(-q / (state.width[i] * state.width[i]));
    }
    return sum;
}

std::vector<double> param_gradient(const MixtureState& state, std::span<const double> x) {
    check_point(state, x);
    std::vector<double> grad(static_cast<std::size_t>(state.n_params()));
    std::size_t j = 0;
    for (int i = 0; i < state.terms(); ++i) {
        const double* c = state.center.data() + static_cast<std::size_t>(i) * state.dim;
        const double A = state.amp[i];
        const double L = state.width[i];
        const double L2 = L * L;
        double q = 0.0;
        for (int ax = 0; ax < state.dim; ++ax) {
            const double dx = x[ax] - c[ax];
            q += dx * dx;
        }
        const double e = std::exp(-q / L2);
        grad[j++] = 2.0 * A * e;
        grad[j++] = 2.0 * A * A * q / (L2 * L) * e;
        const double cg = 2.0 * A * A / L2 * e;
        for (int ax = 0; ax < state.dim; ++ax) {
            grad[j++] = cg * (x[ax] - c[ax]);
        }
    }
    return grad;
}

double total_probability(const MixtureState& state) {
    double sum = 0.0;
    for (int i = 0; i < state.terms(); ++i) {
        sum += state.amp[i] * state.amp[i] *
               std::pow(std::numbers::pi * state.width[i] * state.width[i], 0.5 * state.dim);
    }
    return sum;
}

std::vector<double> total_probability_gradient(const MixtureState& state) {
    std::vector<double> grad(static_cast<std::size_t>(state.n_params()), 0.0);
    std::size_t j = 0;
    for (int i = 0; i < state.terms(); ++i) {
        const double A = state.amp[i];
        const double L = state.width[i];
        const double vol = std::pow(std::numbers::pi * L * L, 0.5 * state.dim);
        grad[j++] = 2.0 * A * vol;
        grad[j++] = state.dim * A * A * vol / L;
        j += state.dim; // center entries stay zero
    }
    return grad;
}

void normalize_total_probability(MixtureState& state) {
    const double mass = total_probability(state);
    if (!(mass > 0.0) || !std::isfinite(mass)) {
        throw std::invalid_argument("total probability must be positive to normalize");
    }
    const double s = 1.0 / std::sqrt(mass);
    for (double& a : state.amp) a *= s;
}

std::vector<double> flatten(const MixtureState& state) {
    std::vector<double> theta(static_cast<std::size_t>(state.n_params()));
    std::size_t j = 0;
    for (int i = 0; i < state.terms(); ++i) {
        theta[j++] = state.amp[i];
        theta[j++] = state.width[i];
        for (int ax = 0; ax < state.dim; ++ax) {
            theta[j++] = state.center[static_cast<std::size_t>(i) * state.dim + ax];
        }
    }
    return theta;
}

MixtureState unflatten(int dim, std::span<const double> theta) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("bad dimension in unflatten");
    const std::size_t block = static_cast<std::size_t>(dim) + 2;
    if (theta.empty() || theta.size() % block != 0) {
        throw std::invalid_argument("flattened parameter count " +
                                    std::to_string(theta.size()) +
                                    " is not a multiple of dim + 2");
    }
    const int r = static_cast<int>(theta.size() / block);
    MixtureState state;
    state.dim = dim;
    state.amp.resize(r);
    state.width.resize(r);
    state.center.resize(static_cast<std::size_t>(r) * dim);
    std::size_t j = 0;
    for (int i = 0; i < r; ++i) {
        state.amp[i] = theta[j++];
        state.width[i] = theta[j++];
        for (int ax = 0; ax < dim; ++ax) {
            state.center[static_cast<std::size_t>(i) * dim + ax] = theta[j++];
        }
    }
    return state;
}

GaussPoly term_gausspoly(const MixtureState& state, int i) {
    GaussPoly g;
    g.center.assign(state.center.begin() + static_cast<std::size_t>(i) * state.dim,
                    state.center.begin() + static_cast<std::size_t>(i + 1) * state.dim);
    g.width_sq = state.width[i] * state.width[i];
    g.poly = Poly::constant(state.dim, state.amp[i] * state.amp[i]);
    return g;
}

std::vector<GaussPoly> parameter_partials(const MixtureState& state) {
    std::vector<GaussPoly> partials;
    partials.reserve(static_cast<std::size_t>(state.n_params()));
    const int d = state.dim;
    for (int i = 0; i < state.terms(); ++i) {
        const double A = state.amp[i];
        const double L = state.width[i];
        const double L2 = L * L;
        std::vector<double> c(state.center.begin() + static_cast<std::size_t>(i) * d,
                              state.center.begin() + static_cast<std::size_t>(i + 1) * d);

        GaussPoly gA;
        gA.center = c;
        gA.width_sq = L2;
        gA.poly = Poly::constant(d, 2.0 * A);
        partials.push_back(std::move(gA));

        // |x - c|^2 expanded into monomials
        Poly dist_sq(d);
        {
            std::vector<Monomial> ms;
            double c2 = 0.0;
            for (int ax = 0; ax < d; ++ax) {
                ExpVec e2{};
                e2[ax] = 2;
                ms.push_back({e2, 1.0});
                ExpVec e1{};
                e1[ax] = 1;
                ms.push_back({e1, -2.0 * c[ax]});
                c2 += c[ax] * c[ax];
            }
            ms.push_back({ExpVec{}, c2});
            dist_sq = Poly::from_terms(d, std::move(ms));
        }

        GaussPoly gL;
        gL.center = c;
        gL.width_sq = L2;
        gL.poly = dist_sq * (2.0 * A * A / (L2 * L));
        partials.push_back(std::move(gL));

        for (int ax = 0; ax < d; ++ax) {
            GaussPoly gc;
            gc.center = c;
            gc.width_sq = L2;
            gc.poly = Poly::axis_power(d, ax, 1, 2.0 * A * A / L2) +
                      Poly::constant(d, -2.0 * A * A * c[ax] / L2);
            partials.push_back(std::move(gc));
        }
    }
    return partials;
}

MixtureMoments mixture_moments(const MixtureState& state) {
    const int d = state.dim;
    const double mass = total_probability(state);
    if (!(mass > 0.0)) throw std::invalid_argument("mixture has nonpositive mass");

    MixtureMoments m;
    m.mean = Eigen::VectorXd::Zero(d);
    m.second = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < state.terms(); ++i) {
        const double L2 = state.width[i] * state.width[i];
        const double w = state.amp[i] * state.amp[i] *
                         std::pow(std::numbers::pi * L2, 0.5 * d) / mass;
        Eigen::Map<const Eigen::VectorXd> c(state.center.data() + static_cast<std::size_t>(i) * d, d);
        m.mean += w * c;
        m.second += w * (c * c.transpose() +
                         0.5 * L2 * Eigen::MatrixXd::Identity(d, d));
    }
    m.covariance = m.second - m.mean * m.mean.transpose();
    return m;
}

} // namespace ronsfp
