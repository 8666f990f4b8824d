#pragma once

#include <vector>

#include "wavemap/segment_solver.hpp"

namespace wavemap::match {

using seg::PicardConfig;
using seg::ProfileMode;
using seg::SegmentSolution;
using seg::ShootingParams;

struct MatchReport {
    int newton_steps = 0;
    double final_residual = 0;
    double jacobian_det = 0;   // reported, not asserted
    double jacobian_cond = 0;
    std::vector<double> step_residuals;
};

struct InteriorMatch {
    double d1 = 0, d2 = 0, d3 = 0;
    MatchReport report;
};

struct ExteriorMatch {
    double d1t = 0, d2t = 0, d3t = 0;
    MatchReport report;
};

// Newton solve of the value/derivative connection at a = 1/2 between the
// d0-seeded solution and the two-parameter family below the cone.
InteriorMatch match_interior(double d0, const PicardConfig& cfg);

// Connection at a = 2 between the (1, 2] family and the far-field family.
ExteriorMatch match_exterior(double q1, double q2, const PicardConfig& cfg);

// Single-constant two-sided expansion around a = 1. The log basis function
// carries the sign of a^2-1, which makes C2 single-valued across the cone;
// C1 is a side average whose mismatch lands in the Q4 envelope.
struct ConeExpansion {
    double C1 = 0, C2 = 0, C3 = 0;
    double Q4_envelope = 0;
};

struct FarFieldData {
    double limit = 0;               // c1 (or q1)
    double coeff = 0;               // c2 (or -4 q2)
    double remainder_envelope = 0;  // sup a^2 |Q - limit - coeff/a| on the window
};

struct GlobalProfile {
    ShootingParams params;
    SegmentSolution interior, subcone, supercone, outer;  // outer: farfield or extension
    double cone_left = 0, cone_right = 0;                 // 2 d3 and -2 d3t traces
    double continuity_residual = 0;
    ConeExpansion cone_expansion;
    FarFieldData farfield;
    MatchReport interior_match, exterior_match;

    double a_max() const { return outer.a_hi; }
    // Q0 and Q0' anywhere on (0, a_max]; beyond a_max the fitted far-field
    // asymptote limit + coeff/a is used. Inside the cone gap the closed-form
    // linear parts of the adjacent segment are used.
    std::pair<double, double> q0(double a) const;
    double q0_value(double a) const { return q0(a).first; }
};

// Assemble the full profile. In small mode q1 is the free exterior input;
// in large mode d1t (>= 1) is. Continuity at the cone fixes d3t = -d3.
GlobalProfile glue_at_cone(double d0, ProfileMode mode, double free_param,
                           const PicardConfig& cfg);

ConeExpansion extract_cone_expansion(const GlobalProfile& p);
FarFieldData extract_farfield(const GlobalProfile& p);

// Pointwise ODE residual of the assembled profile: five-point differences of
// Q0 minus the owning segment's closed-form linear part, step ~ 0.02 of the
// distance to the cone.
double profile_ode_residual(const GlobalProfile& p, double a);

// Basis functions of the cone expansion (Q3 = 2/a).
double cone_basis_b1(double a);       // |a^2-1|/a^2
double cone_basis_b2(double a);       // ((a^2-1)/a^2) log(|a-1|/(a+1))
double cone_basis_q3(double a);       // 2/a

}  // namespace wavemap::match
