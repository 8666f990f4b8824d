#pragma once

#include <span>
#include <utility>
#include <vector>

#include "wavemap/basis.hpp"

namespace wavemap::seg {

enum class ProfileMode { small, large };

// Scalar parameters tying the four segments together. d3 is slaved to d2
// through sin(4 d3) = 4 d2 (same for the tilded pair).
struct ShootingParams {
    double d0 = 0, d1 = 0, d2 = 0, d3 = 0;
    double d1t = 0, d2t = 0, d3t = 0;
    double q1 = 0, q2 = 0;
    ProfileMode mode = ProfileMode::small;

    // Throws RejectedParameterError when the arcsine constraints are broken
    // or a parameter exceeds the smallness bound for its mode.
    void validate(double smallness_bound) const;
};

struct PicardConfig {
    int mesh_points = 2001;
    double grading_exponent = 1.0;   // >= 1; extra clustering toward the singular endpoint
    double endpoint_offset = 1e-10;  // distance of the last node from a = 1
    double tol = 1e-12;              // sup-norm of the iterate update
    int max_iter = 100;
    double farfield_cutoff = 1e3;    // A_max for the [2, inf) problem
    double smallness_bound = 0.2;

    void validate() const;  // throws std::invalid_argument
};

enum class SegmentKind { interior, subcone, supercone, farfield, extension };

// Sign of the correction integral. residual_selected is the orientation
// under which the converged profile satisfies the ODE (ode_residual is the
// arbiter); flipped negates it on the interior, subcone and supercone
// problems. The two orientations coincide for the far field.
enum class KernelOrientation { residual_selected, flipped };

struct Convergence {
    int iterations = 0;                 // correction sweeps beyond the linear seed
    double final_update_supnorm = 0;
    double contraction_ratio = 0;       // ratio of the last two update norms
    double tail_bound = 0;              // far field only
    double interp_error_bound = 0;      // cubic-interpolation bound between nodes
    std::vector<double> update_history; // sup-norm of each sweep's update
};

struct SegmentSolution {
    SegmentKind kind = SegmentKind::interior;
    basis::Region region = basis::Region::interior;
    double a_lo = 0, a_hi = 0;
    std::vector<double> nodes, q, qp;
    // correction iterate (Q minus the closed-form linear part) and its
    // derivative; kept separately so near-cone evaluation does not lose
    // precision to the cancellation Q - lin
    std::vector<double> corr, corrp;
    ShootingParams params;
    Convergence convergence;

    // Closed-form linear part of the representation, its derivative, and
    // the phi-combination alone (the piece annihilated by the linearised
    // operator; excludes the 1/a term).
    double lin_value(double a) const;
    double lin_prime(double a) const;
    double lin_phi_part(double a) const;

    // Q and Q': closed-form linear part plus cubic Hermite interpolation of
    // the stored correction (plain Hermite of Q when no correction is
    // stored). Exact at nodes. Throws std::domain_error outside [a_lo,a_hi].
    std::pair<double, double> evaluate(double a) const;
    std::pair<double, double> evaluate_correction(double a) const;

    // One-sided limit of Q at the cone (subcone: 2 d3, supercone: -2 d3t,
    // plus the extrapolated remainder, which is O(offset^2 log^2 offset)).
    double cone_limit() const;
};

// Q on [0, 1/2] with Q(0) = 0, Q'(0) = d0, as the fixed point of
// Q = d0 phi0 + correction. |d0| must not exceed the smallness bound.
SegmentSolution solve_interior(double d0, const PicardConfig& cfg,
                               KernelOrientation ko = KernelOrientation::residual_selected);

// Q on [1/2, 1) of the form d1 phi1 + d2 phi2 + (d3-d2) 2/a + Q1,
// d3 = asin(4 d2)/4; the trace Q(1-) is 2 d3.
SegmentSolution solve_subcone(double d1, double d2, const PicardConfig& cfg,
                              KernelOrientation ko = KernelOrientation::residual_selected);

// Q on (1, a_hi] of the form d1t phi1~ + d2t phi2~ - (d3t-d2t) 2/a + Q1~;
// trace Q(1+) = -2 d3t. a_hi = 2 for |d1t| below the smallness bound;
// |d1t| >= 1 selects the restricted interval a_hi = 1 + c |d1t|^{-1/2}
// and enables the a-posteriori bound |Q1~| <= C_boot |d1t| (a-1)^2 log^2(a-1).
SegmentSolution solve_supercone(double d1t, double d2t, const PicardConfig& cfg,
                                KernelOrientation ko = KernelOrientation::residual_selected);

// Same with an explicit interval constant c (exposed for calibration).
SegmentSolution solve_supercone_with_c(double d1t, double d2t, const PicardConfig& cfg,
                                       double c_large,
                                       KernelOrientation ko = KernelOrientation::residual_selected);

// Q on [2, A_max] of the form q1 phi1~ + q2 phi2~ + correction, where the
// correction integral runs to infinity; the tail b > A_max is evaluated
// with Q replaced by its linear asymptote and the neglected part is
// reported (and checked) as convergence.tail_bound.
SegmentSolution solve_farfield(double q1, double q2, const PicardConfig& cfg);

// Continue a converged segment outward to a_hi by direct integration of
// the ODE (adaptive embedded Runge-Kutta), sampled on a log-spaced mesh.
SegmentSolution extend_outward(const SegmentSolution& src, double a_hi, int n_nodes);

// |(1-a^2) Q'' + (2/a - 2a) Q' - sin(2Q)/a^2| per interior node, by centered
// differences of Q minus its closed-form linear part (which differentiates
// exactly), skipping nodes within 10*endpoint_offset of a singular endpoint.
// Returns (a, residual) pairs.
std::vector<std::pair<double, double>> ode_residual(const SegmentSolution& seg,
                                                    double endpoint_offset = 1e-10);

// Q'' from the ODE itself, given (a, Q, Q') off the singular points.
double ode_second_derivative(double a, double q, double qp);

// Interval constant of the restricted large-mode domain and the bound
// constant it is calibrated against.
inline constexpr double kLargeModeC = 0.5;
inline constexpr double kBootstrapC = 0.2;

// Largest c in {c_max, c_max/2, ...} (>= c_max/2^10) for which the
// large-mode solve converges and passes the a-posteriori bound for every
// listed d1t. Used to pin kLargeModeC.
double calibrate_large_mode_c(const PicardConfig& cfg, std::span<const double> d1ts,
                              double c_max = 1.0);

}  // namespace wavemap::seg
