#ifndef RONSFP_ASSEMBLER_HPP
#define RONSFP_ASSEMBLER_HPP

#include "ronsfp/fp_operator.hpp"
#include "ronsfp/mixture.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace ronsfp {

enum class HilbertMode {
    l2_symbolic,         // exact L2 inner products via the closed Gaussian algebra
    l2_collocation,      // unweighted least squares on collocation points
    weighted_collocation // per-point weights 1/p, realizing the Fisher metric
};

struct CollocationGrid {
    int dim = 0;
    std::vector<double> points; // n_points x dim, point-major

    int n_points() const {
        return dim == 0 ? 0 : static_cast<int>(points.size()) / dim;
    }
    std::span<const double> point(int k) const {
        return std::span<const double>(points.data() + static_cast<std::size_t>(k) * dim, dim);
    }

    /// Tensor product of per-axis linspaces including both endpoints
    /// (a single count per axis; count 1 places the midpoint).
    static CollocationGrid equidistant_box(std::span<const double> lo,
                                           std::span<const double> hi,
                                           std::span<const int> counts);
    static CollocationGrid random_uniform_box(std::span<const double> lo,
                                              std::span<const double> hi,
                                              int n, std::uint64_t seed);
    static CollocationGrid from_points(int dim, std::vector<double> points);
};

struct HilbertChoice {
    HilbertMode mode = HilbertMode::l2_symbolic;
    CollocationGrid grid; // required by the collocation modes
};

/// Assembled constrained-minimization system
///
///   (metric + alpha I) thetadot = rhs - lambda * constraint_grad
///
/// metric excludes the Tikhonov shift; alpha is carried alongside.
struct RonsSystem {
    Eigen::MatrixXd metric;
    Eigen::VectorXd rhs;
    Eigen::VectorXd constraint_grad;
    double alpha = 0.0;
    HilbertMode mode = HilbertMode::l2_symbolic;
    int clamped_points = 0; // collocation points whose density fell below the weight floor
};

/// Galerkin assembly in exact L2: metric(i,j) = <dp/dtheta_i, dp/dtheta_j>,
/// rhs(i) = <dp/dtheta_i, L p>. Both triangles are filled from one
/// computation, so the returned metric is symmetric to the bit.
RonsSystem assemble_srons(const DriftModel& drift, const MixtureState& state,
                          double t, double alpha, int threads = 1);

/// Collocation assembly: with J(k,i) = dp/dtheta_i(x_k) and b(k) = (L p)(x_k),
/// metric = J^T W J and rhs = J^T W b, W = I (unweighted) or
/// W = diag(1 / max(p(x_k), weight_floor)) (weighted).
RonsSystem assemble_crons(const DriftModel& drift, const MixtureState& state,
                          double t, double alpha, const CollocationGrid& grid,
                          bool weighted, int threads = 1,
                          double weight_floor = 1e-14);

/// Lagrange multiplier enforcing conservation of total probability:
/// lambda = <gI, K^{-1} f> / <gI, K^{-1} gI> with K = metric + alpha I.
double lagrange_multiplier(const RonsSystem& sys);

struct SolveResult {
    Eigen::VectorXd thetadot;
    double lambda = 0.0;
    double cond_estimate = 1.0; // squared diagonal ratio of the Cholesky factor
};

/// Factorizes metric + alpha I (Cholesky, pivoted fallback) and returns the
/// constrained parameter velocity. Throws RegularizationError when the
/// regularized metric is not positive definite.
SolveResult solve_constrained(const RonsSystem& sys, double time = 0.0);

/// Information-geometry metric g(i,j) = int (1/p) dp/dtheta_i dp/dtheta_j dx
/// by adaptive quadrature over a box; dimensions 1 and 2.
Eigen::MatrixXd fisher_metric_quadrature(const MixtureState& state,
                                         std::span<const double> lo,
                                         std::span<const double> hi,
                                         double rel_tol = 1e-10);

struct RhsOptions {
    double alpha = 1e-6;
    HilbertChoice space;
    int threads = 1;
    double width_floor = 1e-10;  // widths at or below this are a collapse
    double weight_floor = 1e-14; // weighted-collocation density clamp
};

/// Callable right-hand side of the parameter ODE: assembles the chosen
/// system at (t, theta) and solves it. Reusable across steps; accumulates
/// timing and clamp diagnostics.
class RonsRhs {
public:
    RonsRhs(DriftModel drift, RhsOptions opts);

    int dim() const { return drift_.dim; }
    const DriftModel& drift() const { return drift_; }
    const RhsOptions& options() const { return opts_; }

    /// Returns false when theta is not usable (nonpositive or collapsed
    /// width, non-finite entry); the integrator treats that as a failed
    /// stage rather than an immediate error.
    bool operator()(double t, const Eigen::VectorXd& theta, Eigen::VectorXd& out,
                    double* cond_estimate = nullptr);

    std::size_t evals() const { return evals_; }
    double assembly_seconds() const { return assembly_seconds_; }
    double solve_seconds() const { return solve_seconds_; }
    long clamped_points_total() const { return clamped_total_; }

private:
    DriftModel drift_;
    RhsOptions opts_;
    std::size_t evals_ = 0;
    double assembly_seconds_ = 0.0;
    double solve_seconds_ = 0.0;
    long clamped_total_ = 0;
};

} // namespace ronsfp

#endif
