#include "wavemap/basis.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wavemap::basis {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// log((1-a)/(1+a)) without cancellation near a = 0.
long double log_ratio_interior(long double a) {
    return std::log1p(-a) - std::log1p(a);
}

// log((a-1)/(a+1)) = log1p(-2/(a+1)).
long double log_ratio_exterior(long double a) {
    return std::log1p(-2.0L / (a + 1.0L));
}

// phi2(a) = sum_{k>=0} 4 a^{2k+1} / ((2k+1)(2k+3)), |a| < 1.
long double phi2_series(long double a) {
    const long double a2 = a * a;
    long double term = a;  // a^{2k+1}
    long double sum = 0.0L;
    for (int k = 0; k < 60; ++k) {
        const long double c = 4.0L / ((2.0L * k + 1.0L) * (2.0L * k + 3.0L));
        const long double add = c * term;
        sum += add;
        if (std::abs((double)add) < 1e-25 * std::abs((double)sum)) break;
        term *= a2;
    }
    return sum;
}

// phi2'(a) = sum_{k>=0} 4 a^{2k} / (2k+3).
long double phi2_prime_series(long double a) {
    const long double a2 = a * a;
    long double term = 1.0L;
    long double sum = 0.0L;
    for (int k = 0; k < 60; ++k) {
        const long double add = 4.0L / (2.0L * k + 3.0L) * term;
        sum += add;
        if (std::abs((double)add) < 1e-25 * std::abs((double)sum)) break;
        term *= a2;
    }
    return sum;
}

void require_interior(double a, const char* who) {
    if (!(a > 0.0 && a < 1.0)) throw std::domain_error(std::string(who) + ": a must lie in (0,1)");
}
void require_exterior(double a, const char* who) {
    if (!(a > 1.0)) throw std::domain_error(std::string(who) + ": a must lie in (1,inf)");
}

}  // namespace

SelfSimCoordinate SelfSimCoordinate::classify(double a) {
    if (!(a > 0.0)) throw std::domain_error("SelfSimCoordinate: a must be positive");
    Region r = a < 1.0 ? Region::interior : (a > 1.0 ? Region::exterior : Region::cone);
    return {a, r};
}

double phi1(double a) {
    require_interior(a, "phi1");
    return (1.0 - a * a) / (a * a);
}

double phi1_prime(double a) {
    require_interior(a, "phi1_prime");
    return -2.0 / (a * a * a);
}

double phi2(double a) {
    require_interior(a, "phi2");
    if (a < kPhi2SeriesCut) return static_cast<double>(phi2_series(a));
    const long double la = a;
    const long double L = log_ratio_interior(la);
    return static_cast<double>(2.0L / la + (1.0L - la * la) / (la * la) * L);
}

double phi2_prime(double a) {
    require_interior(a, "phi2_prime");
    if (a < 1e-2) return static_cast<double>(phi2_prime_series(a));
    const long double la = a;
    const long double L = log_ratio_interior(la);
    return static_cast<double>(-4.0L / (la * la) - 2.0L / (la * la * la) * L);
}

double phi0(double a) { return 0.75 * phi2(a); }
double phi0_prime(double a) { return 0.75 * phi2_prime(a); }

std::pair<double, double> phi_interior(double a) {
    require_interior(a, "phi_interior");
    return {phi1(a), phi2(a)};
}

double phi1_ext(double a) {
    require_exterior(a, "phi1_ext");
    return (a * a - 1.0) / (a * a);
}

double phi1_ext_prime(double a) {
    require_exterior(a, "phi1_ext_prime");
    return 2.0 / (a * a * a);
}

double phi2_ext(double a) {
    require_exterior(a, "phi2_ext");
    if (a > kPhi2ExtSeriesCut) {
        // -4/a + a^{-2} phi2(1/a) summed directly in inverse powers
        const long double u = 1.0L / (long double)a;
        return static_cast<double>(-4.0L * u + u * u * phi2_series(u));
    }
    const long double la = a;
    const long double L = log_ratio_exterior(la);
    return static_cast<double>(-2.0L / la + (la * la - 1.0L) / (la * la) * L);
}

double phi2_ext_prime(double a) {
    require_exterior(a, "phi2_ext_prime");
    if (a > kPhi2ExtSeriesCut) {
        const long double u = 1.0L / (long double)a;
        // d/da [-4u + u^2 phi2(u)] with du/da = -u^2
        const long double dphi2 = phi2_prime_series(u);
        return static_cast<double>(u * u * (4.0L - 2.0L * u * phi2_series(u) - u * u * dphi2));
    }
    const long double la = a;
    const long double L = log_ratio_exterior(la);
    return static_cast<double>(4.0L / (la * la) + 2.0L / (la * la * la) * L);
}

std::pair<double, double> phi_exterior(double a) {
    require_exterior(a, "phi_exterior");
    return {phi1_ext(a), phi2_ext(a)};
}

double wronskian(double b) {
    if (!(b > 0.0)) throw std::domain_error("wronskian: b must be positive");
    return 4.0 / (b * b);
}

KernelEval green_interior(double a, double b) {
    require_interior(a, "green_interior");
    require_interior(b, "green_interior");
    if (a == b) return {0.0, 0.0};  // antisymmetric numerator
    const long double la = a, lb = b;
    const long double La = log_ratio_interior(la);
    const long double Lb = log_ratio_interior(lb);
    // G = phi1(a) * [phi2(b) b^2/4] - [phi1(b) b^2/4] * phi2(a)
    const long double p1a = (1.0L - la * la) / (la * la);
    const long double p2a = la < kPhi2SeriesCut ? phi2_series(la) : 2.0L / la + p1a * La;
    const long double r_b = lb < kPhi2SeriesCut ? phi2_series(lb) * lb * lb / 4.0L
                                                : (2.0L * lb + (1.0L - lb * lb) * Lb) / 4.0L;
    const long double p_b = (1.0L - lb * lb) / 4.0L;
    const long double t1 = p1a * r_b;
    const long double t2 = p_b * p2a;
    KernelEval out;
    out.value = static_cast<double>(t1 - t2);
    out.abs_error_estimate = 4.0 * kEps * (std::abs((double)t1) + std::abs((double)t2));
    return out;
}

KernelEval green_exterior(double a, double b) {
    require_exterior(a, "green_exterior");
    require_exterior(b, "green_exterior");
    if (a == b) return {0.0, 0.0};  // antisymmetric numerator
    const long double la = a, lb = b;
    const long double La = log_ratio_exterior(la);
    const long double Lb = log_ratio_exterior(lb);
    const long double p1a = (la * la - 1.0L) / (la * la);
    const long double p2a = -2.0L / la + p1a * La;
    const long double r_b = (-2.0L * lb + (lb * lb - 1.0L) * Lb) / 4.0L;
    const long double p_b = (lb * lb - 1.0L) / 4.0L;
    const long double t1 = p1a * r_b;
    const long double t2 = p_b * p2a;
    KernelEval out;
    out.value = static_cast<double>(t1 - t2);
    out.abs_error_estimate = 4.0 * kEps * (std::abs((double)t1) + std::abs((double)t2));
    return out;
}

double green_interior_cone_limit(double b) {
    require_interior(b, "green_interior_cone_limit");
    return -(1.0 - b * b) / 2.0;
}

double nonlinearity_f(double u) { return std::sin(2.0 * u); }

double sin2q_minus_2q(double q) {
    if (std::abs(q) < kForcingSeriesCut) {
        const double q2 = q * q;
        // sin(2q)-2q = -(4/3)q^3 + (4/15)q^5 - (8/315)q^7 + (4/2835)q^9 - ...
        return q * q2 *
               (-4.0 / 3.0 +
                q2 * (4.0 / 15.0 + q2 * (-8.0 / 315.0 + q2 * (4.0 / 2835.0 - q2 * 8.0 / 155925.0))));
    }
    return std::sin(2.0 * q) - 2.0 * q;
}

double picard_forcing(double q, double a) {
    if (!(a > 0.0) || a == 1.0)
        throw std::domain_error("picard_forcing: a must be positive and distinct from 1");
    return sin2q_minus_2q(q) / (a * a * (1.0 - a * a));
}

}  // namespace wavemap::basis
