#pragma once

#include <utility>

namespace wavemap::basis {

enum class Region { interior, cone, exterior };

// Similarity variable a = r/t with its region tag.
struct SelfSimCoordinate {
    double a;
    Region region;
    // Throws std::domain_error unless a > 0.
    static SelfSimCoordinate classify(double a);
};

// Kernel value plus a worst-case rounding estimate (per-term eps accounting;
// internals run in long double so the estimate is conservative).
struct KernelEval {
    double value;
    double abs_error_estimate;
};

// Interior fundamental pair of the linearised operator
//   psi'' + (2/a) psi' - 2 psi / (a^2 (1-a^2)) = 0      on (0,1):
//   phi1(a) = (1-a^2)/a^2
//   phi2(a) = 2/a + ((1-a^2)/a^2) log((1-a)/(1+a)),
// phi2 by its odd series below a = 1e-3 (the closed form cancels there).
double phi1(double a);
double phi2(double a);
double phi1_prime(double a);
double phi2_prime(double a);
// phi0 = (3/4) phi2, normalised so phi0'(0) = 1.
double phi0(double a);
double phi0_prime(double a);
std::pair<double, double> phi_interior(double a);  // {phi1, phi2}, domain (0,1)

// Exterior pair on (1,inf):
//   phi1_ext(a) = (a^2-1)/a^2
//   phi2_ext(a) = -2/a + ((a^2-1)/a^2) log((a-1)/(a+1)) = -4/a + (4/3)a^-3 + ...
// phi2_ext by its large-a series above a = 1e3.
double phi1_ext(double a);
double phi2_ext(double a);
double phi1_ext_prime(double a);
double phi2_ext_prime(double a);
std::pair<double, double> phi_exterior(double a);  // {phi1_ext, phi2_ext}, domain (1,inf)

// W(b) = phi1 phi2' - phi1' phi2 = 4/b^2 (same value for the exterior pair).
double wronskian(double b);

// G(a,b)  = [phi1(a) phi2(b) - phi1(b) phi2(a)] / W(b),          0 < a,b < 1
// Gt(a,b) = [phi1_ext(a) phi2_ext(b) - phi1_ext(b) phi2_ext(a)] / W(b),  a,b > 1
KernelEval green_interior(double a, double b);
KernelEval green_exterior(double a, double b);
// lim_{a->1-} G(a,b) = -(1-b^2)/2, exposed explicitly.
double green_interior_cone_limit(double b);

// f(u) = 2 sin u cos u = sin(2u).
double nonlinearity_f(double u);

// sin(2q) - 2q, by series for |q| < 1e-2: -(4/3)q^3 + (4/15)q^5 - (8/315)q^7 + ...
double sin2q_minus_2q(double q);

// H(q, a) = (sin(2q) - 2q) / (a^2 (1-a^2)), a not in {0, 1}.
double picard_forcing(double q, double a);

// Series switchover thresholds (overlap-tested in both branches).
inline constexpr double kPhi2SeriesCut = 1e-3;
inline constexpr double kPhi2ExtSeriesCut = 1e3;
inline constexpr double kForcingSeriesCut = 1e-2;

}  // namespace wavemap::basis
