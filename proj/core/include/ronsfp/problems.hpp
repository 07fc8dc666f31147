#ifndef RONSFP_PROBLEMS_HPP
#define RONSFP_PROBLEMS_HPP

#include "ronsfp/fp_operator.hpp"
#include "ronsfp/mixture.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace ronsfp::problems {

/// dX = -gamma X dt + sigma dW in one dimension.
DriftModel ou_drift(double gamma, double sigma);

/// Overdamped particle in the double-well potential V = x^4/4 - x^2/2:
/// dX = (x - x^3) dt + sigma dW.
DriftModel bistable_drift(double sigma);

/// Noise-driven oscillator dx = y dt, dy = (a1 x + a2 y + a3 x^3) dt + sigma dW;
/// the noise acts on the velocity only.
DriftModel duffing_drift(double a1, double a2, double a3, double sigma);

/// d interacting particles in a moving trap,
///   F_l = a(t) - (1 + gamma) x_l + (gamma / d) sum_j x_j,
/// a(t) = amp (sin(omega t) + offset), isotropic diffusion nu.
DriftModel harmonic_trap_drift(int dim, double amp, double omega, double offset,
                               double gamma, double nu);

/// Single Gaussian matching the point-source solution of the linear drift at
/// time t0 (mass exactly 1, centered at the origin).
MixtureState ou_exact_initial(double gamma, double sigma, double t0);

struct InitGroup {
    int count = 0;
    std::vector<double> center;
};

/// Mixture with shared amplitude and width whose terms sit at the group
/// centers (repeated within each group). Coincident terms would evolve as
/// one forever: every flow quantity is symmetric under their exchange, so
/// the ODE cannot separate them. A tiny deterministic center perturbation
/// (scale jitter, drawn from seed) breaks the tie; it is projected to zero
/// weighted mean so the mixture's mean and mass are exactly preserved.
MixtureState grouped_initial(int dim, std::span<const InitGroup> groups, double amp,
                             double width, double jitter, std::uint64_t seed);

} // namespace ronsfp::problems

#endif
