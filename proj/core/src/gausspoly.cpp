#include "ronsfp/gausspoly.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ronsfp {

namespace {

void check_dim(int dim) {
    if (dim < 1 || dim > kMaxDim) {
        throw std::invalid_argument("dimension must be in [1, " +
                                    std::to_string(kMaxDim) + "], got " +
                                    std::to_string(dim));
    }
}

} // namespace

Poly::Poly(int dim) : dim_(dim) { check_dim(dim); }

Poly Poly::constant(int dim, double c) {
    Poly p(dim);
    if (c != 0.0) p.terms_.push_back({ExpVec{}, c});
    return p;
}

Poly Poly::axis_power(int dim, int axis, int power, double c) {
    Poly p(dim);
    if (axis < 0 || axis >= dim) throw std::invalid_argument("axis out of range");
    if (power < 0 || power > 255) throw std::invalid_argument("power out of range");
    if (c != 0.0) {
        ExpVec e{};
        e[axis] = static_cast<std::uint8_t>(power);
        p.terms_.push_back({e, c});
    }
    return p;
}

Poly Poly::from_terms(int dim, std::vector<Monomial> terms) {
    Poly p(dim);
    p.terms_ = std::move(terms);
    p.normalize();
    return p;
}

void Poly::normalize() {
    std::sort(terms_.begin(), terms_.end(),
              [](const Monomial& a, const Monomial& b) { return a.exps < b.exps; });
    std::size_t out = 0;
    for (std::size_t i = 0; i < terms_.size();) {
        double c = terms_[i].coeff;
        std::size_t j = i + 1;
        while (j < terms_.size() && terms_[j].exps == terms_[i].exps) {
            c += terms_[j].coeff;
            ++j;
        }
        if (c != 0.0) {
            terms_[out].exps = terms_[i].exps;
            terms_[out].coeff = c;
            ++out;
        }
        i = j;
    }
    terms_.resize(out);
}

int Poly::total_degree() const {
    int deg = 0;
    for (const auto& t : terms_) {
        int d = 0;
        for (int ax = 0; ax < dim_; ++ax) d += t.exps[ax];
        deg = std::max(deg, d);
    }
    return deg;
}

int Poly::axis_degree(int axis) const {
    int deg = 0;
    for (const auto& t : terms_) deg = std::max(deg, static_cast<int>(t.exps[axis]));
    return deg;
}

double Poly::evaluate(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim_) {
        throw std::invalid_argument("point dimension mismatch in Poly::evaluate");
    }
    double sum = 0.0;
    for (const auto& t : terms_) {
        double v = t.coeff;
        for (int ax = 0; ax < dim_; ++ax) {
            for (int k = 0; k < t.exps[ax]; ++k) v *= x[ax];
        }
        sum += v;
    }
    return sum;
}

Poly& Poly::operator+=(const Poly& other) {
    if (other.dim_ != dim_) {
        if (terms_.empty() && dim_ == 0) {
            dim_ = other.dim_; // adding into a default-constructed accumulator
        } else {
            throw std::invalid_argument("dimension mismatch in Poly addition");
        }
    }
    terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
    normalize();
    return *this;
}

Poly& Poly::operator*=(double s) {
    if (s == 0.0) {
        terms_.clear();
        return *this;
    }
    for (auto& t : terms_) t.coeff *= s;
    return *this;
}

Poly operator*(const Poly& a, const Poly& b) {
    if (a.dim_ != b.dim_) throw std::invalid_argument("dimension mismatch in Poly product");
    Poly out(a.dim_);
    out.terms_.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& ta : a.terms_) {
        for (const auto& tb : b.terms_) {
            Monomial m;
            m.coeff = ta.coeff * tb.coeff;
            for (int ax = 0; ax < a.dim_; ++ax) {
                int e = ta.exps[ax] + tb.exps[ax];
                if (e > 255) throw std::invalid_argument("monomial degree overflow");
                m.exps[ax] = static_cast<std::uint8_t>(e);
            }
            out.terms_.push_back(m);
        }
    }
    out.normalize();
    return out;
}

Poly Poly::differentiate(int axis) const {
    if (axis < 0 || axis >= dim_) throw std::invalid_argument("axis out of range");
    Poly out(dim_);
    out.terms_.reserve(terms_.size());
    for (const auto& t : terms_) {
        if (t.exps[axis] == 0) continue;
        Monomial m = t;
        m.coeff *= t.exps[axis];
        m.exps[axis] = static_cast<std::uint8_t>(t.exps[axis] - 1);
        out.terms_.push_back(m);
    }
    out.normalize();
    return out;
}

double GaussPoly::evaluate(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim()) {
        throw std::invalid_argument("point dimension mismatch in GaussPoly::evaluate");
    }
    double q = 0.0;
    for (int ax = 0; ax < dim(); ++ax) {
        const double dx = x[ax] - center[ax];
        q += dx * dx;
    }
    return poly.evaluate(x) * std::exp(-q / width_sq);
}

GaussPoly product(const GaussPoly& a, const GaussPoly& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch in GaussPoly product");
    const int d = a.dim();
    const double wa = a.width_sq, wb = b.width_sq;
    const double wsum = wa + wb;

    GaussPoly out;
    out.width_sq = wa * wb / wsum;
    out.center.resize(d);
    double sep_sq = 0.0;
    for (int ax = 0; ax < d; ++ax) {
        out.center[ax] = (wb * a.center[ax] + wa * b.center[ax]) / wsum;
        const double dc = a.center[ax] - b.center[ax];
        sep_sq += dc * dc;
    }
    out.poly = (a.poly * b.poly) * std::exp(-sep_sq / wsum);
    return out;
}

GaussPoly differentiate(const GaussPoly& g, int axis) {
    if (axis < 0 || axis >= g.dim()) throw std::invalid_argument("axis out of range");
    GaussPoly out;
    out.center = g.center;
    out.width_sq = g.width_sq;
    // (p e)' = (p' - (2/a)(x - mu) p) e
    Poly shift = Poly::axis_power(g.dim(), axis, 1, -2.0 / g.width_sq) +
                 Poly::constant(g.dim(), 2.0 * g.center[axis] / g.width_sq);
    out.poly = g.poly.differentiate(axis) + shift * g.poly;
    return out;
}

MomentTable::MomentTable(std::span<const double> center, double width_sq, int max_degree)
    : dim_(static_cast<int>(center.size())), max_degree_(max_degree) {
    check_dim(dim_);
    if (width_sq <= 0.0) throw std::invalid_argument("width_sq must be positive");
    if (max_degree_ < 0 || max_degree_ > kMaxMomentDegree) {
        throw std::invalid_argument("moment table degree " + std::to_string(max_degree_) +
                                    " outside [0, " + std::to_string(kMaxMomentDegree) + "]");
    }
    const double s0 = std::sqrt(std::numbers::pi * width_sq);
    const double half_a = 0.5 * width_sq;
    for (int ax = 0; ax < dim_; ++ax) {
        double* row = table_.data() + static_cast<std::size_t>(ax) * (kMaxMomentDegree + 1);
        const double m = center[ax];
        row[0] = s0;
        if (max_degree_ >= 1) row[1] = m * s0;
        for (int k = 1; k < max_degree_; ++k) {
            row[k + 1] = m * row[k] + half_a * k * row[k - 1];
        }
    }
}

double MomentTable::monomial_integral(const ExpVec& exps, int dim) const {
    double v = 1.0;
    for (int ax = 0; ax < dim; ++ax) v *= axis_value(ax, exps[ax]);
    return v;
}

double integral(const GaussPoly& g) {
    if (g.poly.empty()) return 0.0;
    int maxdeg = 0;
    for (int ax = 0; ax < g.dim(); ++ax) maxdeg = std::max(maxdeg, g.poly.axis_degree(ax));
    MomentTable table(g.center, g.width_sq, maxdeg);
    double sum = 0.0;
    for (const auto& t : g.poly.terms()) {
        sum += t.coeff * table.monomial_integral(t.exps, g.dim());
    }
    return sum;
}

GaussianPair combine_gaussians(std::span<const double> ca, double wa,
                               std::span<const double> cb, double wb) {
    if (ca.size() != cb.size()) {
        throw std::invalid_argument("dimension mismatch in combine_gaussians");
    }
    GaussianPair out;
    out.dim = static_cast<int>(ca.size());
    check_dim(out.dim);
    const double wsum = wa + wb;
    out.width_sq = wa * wb / wsum;
    double sep_sq = 0.0;
    for (int ax = 0; ax < out.dim; ++ax) {
        out.center[ax] = (wb * ca[ax] + wa * cb[ax]) / wsum;
        const double dc = ca[ax] - cb[ax];
        sep_sq += dc * dc;
    }
    out.prefactor = std::exp(-sep_sq / wsum);
    return out;
}

double pair_integral(const Poly& pa, const Poly& pb, const MomentTable& table) {
    const int d = pa.dim();
    double sum = 0.0;
    for (const auto& ta : pa.terms()) {
        for (const auto& tb : pb.terms()) {
            double v = ta.coeff * tb.coeff;
            for (int ax = 0; ax < d; ++ax) {
                v *= table.axis_value(ax, ta.exps[ax] + tb.exps[ax]);
            }
            sum += v;
        }
    }
    return sum;
}

double integral_of_product(const GaussPoly& a, const GaussPoly& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch in integral_of_product");
    if (a.poly.empty() || b.poly.empty()) return 0.0;
    const int d = a.dim();
    const GaussianPair pair = combine_gaussians(a.center, a.width_sq, b.center, b.width_sq);
    if (pair.prefactor == 0.0) return 0.0;

    int maxdeg = 0;
    for (int ax = 0; ax < d; ++ax) {
        maxdeg = std::max(maxdeg, a.poly.axis_degree(ax) + b.poly.axis_degree(ax));
    }
    const MomentTable table(pair, maxdeg);
    return pair.prefactor * pair_integral(a.poly, b.poly, table);
}

double GaussPolySum::evaluate(std::span<const double> x) const {
    double v = 0.0;
    for (const auto& t : terms) v += t.evaluate(x);
    return v;
}

double GaussPolySum::integral() const {
    double v = 0.0;
    for (const auto& t : terms) v += ronsfp::integral(t);
    return v;
}

double inner_product_l2(const GaussPoly& a, const GaussPoly& b) {
    return integral_of_product(a, b);
}

double inner_product_l2(const GaussPolySum& a, const GaussPolySum& b) {
    double v = 0.0;
    for (const auto& ta : a.terms) {
        for (const auto& tb : b.terms) v += integral_of_product(ta, tb);
    }
    return v;
}

} // namespace ronsfp
