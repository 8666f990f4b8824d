#pragma once

#include <memory>
#include <span>
#include <vector>

#include "wavemap/matching.hpp"

namespace wavemap::approx {

using match::GlobalProfile;

// Smooth excision profile: chi(x) = 0 for |x| <= C, 1 for |x| >= 2C,
// degree-7 transition (C^3). sup|chi'| = 2.1875/C.
struct CutoffSpec {
    double width = 1.0;  // C

    double chi(double x) const;
    double chi_prime(double x) const;
    double chi_second(double x) const;
    void validate() const;  // throws std::invalid_argument unless width > 0
};

// u(t,r) = chi(t-r) [Q0(a) - C3 Q3(a)] + C3 Q3(a),  a = r/t, Q3 = 2/a.
// Q4 enters as the exact complement Q0 - R - C3 Q3 of the stored profile,
// so the field reduces to Q0 where chi = 1 and to C3 Q3 where chi = 0.
class ApproxSolutionField {
  public:
    ApproxSolutionField(std::shared_ptr<const GlobalProfile> profile, CutoffSpec cutoff);

    const GlobalProfile& profile() const { return *profile_; }
    const CutoffSpec& cutoff() const { return cutoff_; }

    double u(double t, double r) const;
    // value and exact chain-rule time derivative
    std::pair<double, double> u_and_ut(double t, double r) const;

    // chi R + C3 Q3 with the side-exact (C1,C2) = (d1,d2)/(d1t,d2t): the
    // field with the higher-order remainder dropped.
    double u_without_q4(double t, double r) const;

    // e0 = u_tt - u_rr - (2/r) u_r + sin(2u)/r^2.
    // Closed form through the profile (exact off the cone gap):
    double e0(double t, double r) const;
    // Finite differences: 6th order in r, 4th order in t. Throws
    // std::invalid_argument when a step exceeds width/20 (the stencil would
    // straddle both cutoff plateaus).
    double e0_fd(double t, double r, double h_r, double h_t) const;
    double e0_fd(double t, double r) const;  // steps width/20

    // e0 of the remainder-dropped field, same stencils (diagnostic).
    double e0_fd_without_q4(double t, double r, double h_r, double h_t) const;

  private:
    std::shared_ptr<const GlobalProfile> profile_;
    CutoffSpec cutoff_;
    double c3_;
};

struct ResidualNorms {
    double l2 = 0;        // (4 pi int e0^2 r^2 dr)^{1/2} over |t-r| <= 2C
    double strip_sup = 0; // sup |e0| over C <= |t-r| <= 2C
};

// use_fd selects the finite-difference evaluator (joint neighbourhoods of
// |t-r| in {C, 2C} are skipped there); default is the closed form.
ResidualNorms residual_norms(const ApproxSolutionField& f, double t, bool use_fd = false);

// Radial sine transform u_hat(k) = (4 pi / k) int u(r) sin(kr) r dr over the
// sample grid (trapezoid; grid may be nonuniform).
double radial_sine_transform(std::span<const double> r, std::span<const double> u, double k);

// Band functional N(k_min)^2 = (1/(2 pi)^3) int_{k_min}^{k_max} k^3 |u_hat|^2 dk.
// Throws std::invalid_argument when the grid cannot resolve k_max
// (max spacing * k_max > 0.5).
double critical_norm_band(std::span<const double> r, std::span<const double> u, double k_min,
                          double k_max);

// N^2 for a list of ascending k_min values over one shared transform grid
// (the per-value evaluation cost is amortised).
std::vector<double> critical_norm_band_series(std::span<const double> r,
                                              std::span<const double> u,
                                              std::span<const double> k_mins, double k_max);

// Growth scan of the band functional for the time-T data tail: N^2 of
// u(T,.) - limit against log(1/k_min) over `decades` decades below
// 1/(4T), with a smooth decay window on the samples and a control series
// whose fitted coeff/a far tail is removed. Slopes are reported relative
// to the mean N^2 (a growth rate per e-fold).
struct BandGrowthScan {
    std::vector<double> k_mins, n2, n2_control;
    double slope = 0, r2 = 0;
    double relative_slope = 0, control_relative_slope = 0;
};
BandGrowthScan band_growth_scan(const ApproxSolutionField& f, double T, int decades);

// Least-squares slope of log(val) against log(t). Throws
// std::invalid_argument on nonpositive values or fewer than 4 samples.
struct DecayFit {
    double exponent = 0;
    double r2 = 0;
};
DecayFit decay_fit(std::span<const double> ts, std::span<const double> vals);

}  // namespace wavemap::approx
