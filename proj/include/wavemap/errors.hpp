#pragma once

#include <stdexcept>
#include <string>

namespace wavemap {

// Base class for everything the solvers can throw on purpose.
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

// Picard sweep stopped contracting; carries the last update ratio.
struct DivergedIterationError : SolverError {
    double ratio;
    DivergedIterationError(const std::string& msg, double r)
        : SolverError(msg), ratio(r) {}
};

// Seed parameter outside the configured smallness bound (or otherwise invalid).
struct RejectedParameterError : SolverError {
    explicit RejectedParameterError(const std::string& msg) : SolverError(msg) {}
};

// Large-mode a-posteriori bound |Q1bar| <= C*d1t failed on the mesh.
struct BootstrapViolationError : SolverError {
    double measured_ratio;  // sup |Q1bar| / d1t
    BootstrapViolationError(const std::string& msg, double r)
        : SolverError(msg), measured_ratio(r) {}
};

// Far-field tail estimate exceeds the requested tolerance.
struct TruncationDominatedError : SolverError {
    double tail_bound;
    TruncationDominatedError(const std::string& msg, double t)
        : SolverError(msg), tail_bound(t) {}
};

// Newton matching failures.
struct NewtonError : SolverError {
    explicit NewtonError(const std::string& msg) : SolverError(msg) {}
};

// Root bracketing / 1-D root search failure in the gluing step.
struct RootFindError : SolverError {
    explicit RootFindError(const std::string& msg) : SolverError(msg) {}
};

// Least-squares window degenerate (collinear basis on too-narrow window).
struct IllConditionedFitError : SolverError {
    explicit IllConditionedFitError(const std::string& msg) : SolverError(msg) {}
};

}  // namespace wavemap
