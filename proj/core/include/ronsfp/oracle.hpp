#ifndef RONSFP_ORACLE_HPP
#define RONSFP_ORACLE_HPP

#include "ronsfp/fp_operator.hpp"
#include "ronsfp/mixture.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace ronsfp {

enum class SdeScheme {
    euler_maruyama,
    /// Euler predictor with a deterministic trapezoidal corrector on the
    /// drift; the diffusion increment stays Euler.
    predictor_corrector
};

struct EnsembleSpec {
    std::size_t particles = 100'000;
    double h = 1e-3;
    SdeScheme scheme = SdeScheme::euler_maruyama;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct Snapshot {
    double t = 0.0;
    std::vector<double> states; // particles x dim, particle-major
};

/// Draw n points from the mixture density (normalized by its own mass):
/// pick a term by mass, then an isotropic Gaussian with per-axis variance
/// width^2 / 2.
std::vector<double> sample_mixture(const MixtureState& init, std::size_t n,
                                   std::uint64_t seed);

/// Integrate the particle ensemble dX = F dt + sigma dW from init at t0 and
/// return snapshots at the requested times (must be ascending, >= t0).
/// Particles advance in fixed-size blocks with per-block RNG substreams
/// derived from the seed, so results do not depend on the thread count.
std::vector<Snapshot> simulate_sde(const DriftModel& drift, const MixtureState& init,
                                   double t0, std::span<const double> times,
                                   const EnsembleSpec& spec);

struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd second;      // E[x x^T]
    Eigen::MatrixXd covariance;
    Eigen::VectorXd se_mean;     // standard errors of the mean entries
    Eigen::MatrixXd se_second;   // standard errors of the second-moment entries
    std::size_t n = 0;
};

Moments empirical_moments(const Snapshot& snap, int dim);

/// First and second moment ODEs of the linear interacting-particle drift
///   F_i = a(t) - (1 + coupling) x_i + (coupling / dim) sum_j x_j
/// closed exactly for any initial condition:
///   dm_i/dt = a - m_i + (coupling/dim) sum_j (m_j - m_i)
///   dS_ij/dt = a (m_i + m_j) - 2 (1+coupling) S_ij
///              + (coupling/dim) sum_l (S_lj + S_li) + 2 nu delta_ij.
/// Solved with an independent fixed-step RK4 refined until two consecutive
/// halvings agree to rel_tol.
struct MomentTrajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> mean;
    std::vector<Eigen::MatrixXd> second;
};

MomentTrajectory moment_ode_solve(int dim, const CoeffFn& forcing, double coupling,
                                  double nu, const Eigen::VectorXd& mean0,
                                  const Eigen::MatrixXd& second0,
                                  std::span<const double> times,
                                  double rel_tol = 1e-12);

/// Closed-form parameters of the exact Gaussian solution spreading from a
/// point mass at the origin: amplitude (the density's peak value) and width.
struct OuExact {
    double amplitude; // gamma-dependent peak; the density is amplitude * exp(-x^2/width^2)
    double width;
};
OuExact ou_exact_params(double gamma, double sigma, double t);

/// Normalized reference densities for error reporting.
class EquilibriumRef {
public:
    enum class Kind { ou_exact, bistable_eq, duffing_eq };

    static EquilibriumRef ou_exact(double gamma, double sigma, double t);
    /// exp(-(x^4/4 - x^2/2) / nu) normalized by quadrature.
    static EquilibriumRef bistable(double sigma);
    /// exp((-a1 a2 x^2 - a2 a3 x^4 / 2 + a2 y^2) / sigma^2) normalized by
    /// quadrature (separable in x and y).
    static EquilibriumRef duffing(double a1, double a2, double a3, double sigma);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    double normalization() const { return norm_; }
    double density(std::span<const double> x) const;

private:
    Kind kind_;
    int dim_ = 1;
    double norm_ = 1.0; // multiplies the unnormalized shape
    double p0_ = 0, p1_ = 0, p2_ = 0, p3_ = 0;
};

/// || a - b ||_L2 / || b ||_L2 over a box, by adaptive quadrature (dims 1-2).
double l2_relative_error(const std::function<double(std::span<const double>)>& a,
                         const std::function<double(std::span<const double>)>& b,
                         std::span<const double> lo, std::span<const double> hi,
                         double rel_tol = 1e-8);

/// Same norm estimated by uniform Monte Carlo sampling of the box (any dim).
double l2_relative_error_mc(const std::function<double(std::span<const double>)>& a,
                            const std::function<double(std::span<const double>)>& b,
                            std::span<const double> lo, std::span<const double> hi,
                            std::size_t samples, std::uint64_t seed);

} // namespace ronsfp

#endif
