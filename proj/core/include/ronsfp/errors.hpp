#ifndef RONSFP_ERRORS_HPP
#define RONSFP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ronsfp {

/// Base class for failures occurring while a solve is in progress, as opposed
/// to malformed inputs (those throw std::invalid_argument).
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double time)
        : std::runtime_error(what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

/// Step size underflowed while error control kept rejecting steps. The usual
/// remedy is a larger Tikhonov regularization alpha, which damps the stiff
/// near-null directions of the metric.
class StiffnessError : public SolverError {
public:
    StiffnessError(double time, double h, double alpha)
        : SolverError("step size underflow (h = " + std::to_string(h) +
                          ") at t = " + std::to_string(time) +
                          "; the parameter ODE is too stiff for the explicit "
                          "integrator at alpha = " + std::to_string(alpha) +
                          ", consider increasing alpha",
                      time),
          h_(h), alpha_(alpha) {}
    double h() const { return h_; }
    double alpha() const { return alpha_; }

private:
    double h_;
    double alpha_;
};

/// A mixture width collapsed below the positivity floor.
class WidthCollapseError : public SolverError {
public:
    WidthCollapseError(double time, int term, double width)
        : SolverError("mixture width " + std::to_string(width) + " of term " +
                          std::to_string(term) + " collapsed below floor at t = " +
                          std::to_string(time),
                      time),
          term_(term), width_(width) {}
    int term() const { return term_; }
    double width() const { return width_; }

private:
    int term_;
    double width_;
};

/// Total probability drifted past the hard failure threshold.
class ConservationError : public SolverError {
public:
    ConservationError(double time, double drift)
        : SolverError("total probability drifted by " + std::to_string(drift) +
                          " at t = " + std::to_string(time) +
                          "; exceeds hard failure threshold",
                      time),
          drift_(drift) {}
    double drift() const { return drift_; }

private:
    double drift_;
};

/// Regularized metric could not be factorized (not positive definite even
/// after pivoted fallback).
class RegularizationError : public SolverError {
public:
    RegularizationError(double time, double alpha)
        : SolverError("regularized metric factorization failed at t = " +
                          std::to_string(time) + " (alpha = " +
                          std::to_string(alpha) + ")",
                      time),
          alpha_(alpha) {}
    double alpha() const { return alpha_; }

private:
    double alpha_;
};

/// Initial-condition projection failed to reach its tolerance; carries the
/// final objective value for diagnosis.
class ProjectionError : public std::runtime_error {
public:
    ProjectionError(const std::string& what, double objective, int iterations)
        : std::runtime_error(what), objective_(objective), iterations_(iterations) {}
    double objective() const { return objective_; }
    int iterations() const { return iterations_; }

private:
    double objective_;
    int iterations_;
};

} // namespace ronsfp

#endif
