#ifndef RONSFP_MIXTURE_HPP
#define RONSFP_MIXTURE_HPP

#include "ronsfp/gausspoly.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace ronsfp {

/// Sum of isotropic shape-morphing Gaussians
///
///   p(x) = sum_i amp_i^2 * exp(-|x - center_i|^2 / width_i^2)
///
/// Amplitudes enter squared so the density is nonnegative for any real
/// parameter vector; widths must stay positive, which is enforced by
/// validate() rather than by reparameterization.
struct MixtureState {
    int dim = 0;
    std::vector<double> amp;    // r amplitudes A_i (the density carries A_i^2)
    std::vector<double> width;  // r widths L_i
    std::vector<double> center; // r x dim, term-major

    int terms() const { return static_cast<int>(amp.size()); }
    /// Flattened parameter count r * (dim + 2).
    int n_params() const { return terms() * (dim + 2); }

    std::span<const double> center_of(int i) const {
        return std::span<const double>(center.data() + static_cast<std::size_t>(i) * dim, dim);
    }

    /// Throws std::invalid_argument on inconsistent sizes or nonpositive widths.
    void validate() const;
    /// True when all sizes are consistent and every width exceeds min_width.
    bool is_usable(double min_width) const;
};

/// Density value at x.
double evaluate(const MixtureState& state, std::span<const double> x);

/// Gradient of the density with respect to the flattened parameters,
/// in flatten order: per term (amp, width, center components).
///
///   d/dA_k   = 2 A_k e_k
///   d/dL_k   = 2 A_k^2 |x - c_k|^2 / L_k^3 e_k
///   d/dc_kl  = 2 A_k^2 (x_l - c_kl) / L_k^2 e_k
std::vector<double> param_gradient(const MixtureState& state, std::span<const double> x);

/// Total probability I = sum_i amp_i^2 (pi width_i^2)^{dim/2}.
double total_probability(const MixtureState& state);

/// Gradient of total_probability in flatten order (center entries vanish).
std::vector<double> total_probability_gradient(const MixtureState& state);

/// Rescales amplitudes in place so total_probability becomes 1.
/// Throws std::invalid_argument when total probability is not positive.
void normalize_total_probability(MixtureState& state);

/// Flatten order: per term i the block (amp_i, width_i, center_i0..center_i,dim-1).
std::vector<double> flatten(const MixtureState& state);
MixtureState unflatten(int dim, std::span<const double> theta);

/// The parameter partials as closed-form GaussPoly objects (flatten order);
/// this is the bridge between the ansatz and symbolic Galerkin assembly.
std::vector<GaussPoly> parameter_partials(const MixtureState& state);

/// One mixture term as a GaussPoly (poly = amp^2 constant).
GaussPoly term_gausspoly(const MixtureState& state, int i);

struct MixtureMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd second;     // E[x x^T]
    Eigen::MatrixXd covariance; // second - mean mean^T
};

/// Exact moments of the (normalized by its own mass) mixture density.
MixtureMoments mixture_moments(const MixtureState& state);

} // namespace ronsfp

#endif
