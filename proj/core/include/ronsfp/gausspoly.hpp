#ifndef RONSFP_GAUSSPOLY_HPP
#define RONSFP_GAUSSPOLY_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace ronsfp {

/// Compile-time cap on the spatial dimension. Keeps monomial exponent vectors
/// fixed-size (cheap to copy and compare) without touching the heap.
inline constexpr int kMaxDim = 16;

/// Exponent multi-index of a monomial; entries beyond the active dimension
/// stay zero.
using ExpVec = std::array<std::uint8_t, kMaxDim>;

struct Monomial {
    ExpVec exps{};
    double coeff = 0.0;
};

/// Sparse multivariate polynomial in canonical form: terms sorted by exponent
/// vector, exponents unique, zero coefficients dropped.
class Poly {
public:
    Poly() = default;
    explicit Poly(int dim);

    static Poly constant(int dim, double c);
    /// c * x_axis^power
    static Poly axis_power(int dim, int axis, int power, double c);
    static Poly from_terms(int dim, std::vector<Monomial> terms);

    int dim() const { return dim_; }
    const std::vector<Monomial>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    int total_degree() const;
    int axis_degree(int axis) const;

    double evaluate(std::span<const double> x) const;

    Poly& operator+=(const Poly& other);
    Poly& operator*=(double s);
    friend Poly operator+(Poly a, const Poly& b) { a += b; return a; }
    friend Poly operator*(Poly p, double s) { p *= s; return p; }
    friend Poly operator*(double s, Poly p) { p *= s; return p; }
    friend Poly operator*(const Poly& a, const Poly& b);

    /// Partial derivative with respect to x_axis.
    Poly differentiate(int axis) const;

private:
    void normalize();

    int dim_ = 0;
    std::vector<Monomial> terms_;
};

/// poly(x) * exp(-|x - center|^2 / width_sq). The algebra below is closed
/// under products and coordinate derivatives, and integrates exactly over
/// R^dim, which is what makes fully symbolic Galerkin assembly possible.
struct GaussPoly {
    Poly poly;
    std::vector<double> center;
    double width_sq = 1.0;

    int dim() const { return static_cast<int>(center.size()); }
    double evaluate(std::span<const double> x) const;
};

/// Product of two Gaussians is a Gaussian: widths combine harmonically, the
/// center is the width-weighted average, and the cross term becomes a
/// constant factor folded into the polynomial.
GaussPoly product(const GaussPoly& a, const GaussPoly& b);

/// d/dx_axis of a GaussPoly; polynomial degree grows by one.
GaussPoly differentiate(const GaussPoly& g, int axis);

/// Exact integral over R^dim via separable Gaussian moments.
double integral(const GaussPoly& g);

/// integral(product(a, b)) without materializing the product polynomial.
double integral_of_product(const GaussPoly& a, const GaussPoly& b);

/// Combined geometry of a Gaussian pair: exp(-|x-ca|^2/wa) exp(-|x-cb|^2/wb)
/// = prefactor * exp(-|x-center|^2/width_sq). Splitting this off lets one
/// moment table serve every polynomial pair that shares the two Gaussians,
/// which is what makes Galerkin assembly cheap: a mixture term's partials
/// all ride on that term's Gaussian.
struct GaussianPair {
    std::array<double, kMaxDim> center{};
    double width_sq = 1.0;
    double prefactor = 1.0;
    int dim = 0;
};
GaussianPair combine_gaussians(std::span<const double> ca, double wa,
                               std::span<const double> cb, double wb);

/// Largest per-axis monomial degree the moment tables support.
inline constexpr int kMaxMomentDegree = 31;

/// Per-axis tables of S_k = int x^k exp(-(x - m)^2 / a) dx, built once per
/// Gaussian and reused across monomials. S_{k+1} = m S_k + (a/2) k S_{k-1}.
/// Fixed-size storage keeps assembly free of heap traffic.
class MomentTable {
public:
    MomentTable(std::span<const double> center, double width_sq, int max_degree);

    double axis_value(int axis, int k) const {
        return table_[static_cast<std::size_t>(axis) * (kMaxMomentDegree + 1) + k];
    }
    /// Integral of the monomial with the given exponents against the Gaussian.
    double monomial_integral(const ExpVec& exps, int dim) const;
    int max_degree() const { return max_degree_; }

    MomentTable(const GaussianPair& pair, int max_degree)
        : MomentTable(std::span<const double>(pair.center.data(), pair.dim),
                      pair.width_sq, max_degree) {}

private:
    int dim_;
    int max_degree_;
    std::array<double, static_cast<std::size_t>(kMaxDim) * (kMaxMomentDegree + 1)> table_;
};

/// Sum of GaussPoly terms with possibly distinct Gaussians.
struct GaussPolySum {
    std::vector<GaussPoly> terms;

    double evaluate(std::span<const double> x) const;
    double integral() const;
};

/// Coefficient-pair sum int pa * pb against the table's Gaussian; multiply
/// by the pair's prefactor to get the integral of the full product.
double pair_integral(const Poly& pa, const Poly& pb, const MomentTable& table);

/// L2(R^dim) inner product <a, b> = sum over term pairs of the exact
/// pairwise integrals.
double inner_product_l2(const GaussPolySum& a, const GaussPolySum& b);
double inner_product_l2(const GaussPoly& a, const GaussPoly& b);

} // namespace ronsfp

#endif
