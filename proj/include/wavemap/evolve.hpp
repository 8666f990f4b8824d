#pragma once

#include <functional>
#include <vector>

#include "wavemap/approx.hpp"

namespace wavemap::evolve {

using approx::ApproxSolutionField;
using approx::CutoffSpec;
using match::GlobalProfile;

struct RadialGrid {
    double r_max = 100.0;
    int n = 1024;             // cells; nodes 0..n at spacing h
    bool origin_dirichlet = true;

    double h() const { return r_max / n; }
    void validate() const;  // throws std::invalid_argument (n >= 16, r_max > 0)
};

struct WaveState {
    double t = 0;
    std::vector<double> u, ut;  // n+1 samples each
    bool blowup = false;        // set when non-finite values appear
};

struct StepOptions {
    bool nonlinear = true;
    double cfl_max = 0.5;
    // prescribed value and time derivative at r_max; nullptr holds the value
    std::function<std::pair<double, double>(double)> boundary;
};

// One second-order explicit step (leapfrog in time, centered in space);
// u(0) = 0 at the axis. Throws std::invalid_argument when dt > cfl_max h.
WaveState step(const WaveState& s, double dt, const RadialGrid& g, const StepOptions& opt = {});

// E = int (ut^2 + u_r^2) r^2 + 2 sin^2 u dr  (trapezoid on the grid).
double energy(const WaveState& s, const RadialGrid& g);

struct PerturbationNorms {
    double sup = 0;
    double energy = 0;   // (int (eps_t^2 + eps_r^2) r^2 dr)^{1/2}
    double l2 = 0;       // (int eps^2 r^2 dr)^{1/2}
    double l2_5d = 0;    // same quantity through v = eps/r with r^4 dr weight
};
PerturbationNorms perturbation_norms(const RadialGrid& g, const std::vector<double>& eps,
                                     const std::vector<double>& eps_t);

struct PersistenceConfig {
    double gamma_max = 0.1;
    double residual_fraction = 1.0;  // required l2 residual at T per unit delta1
    double blowup_sup = 1e3;
    double cfl = 0.5;
    int record_target = 400;  // roughly this many samples over the run
};

struct PersistenceReport {
    double T = 0, horizon = 0;       // requested start and reached end time
    double delta1 = 0;
    std::vector<double> times, sup_eps, energy_eps, energy_total;
    double gamma_fit = 0, gamma_r2 = 0;
    bool blowup = false;
    double blowup_time = 0;
    bool persistent = false;
};

// Evolve u = u_approx + eps from t = T to horizon_factor*T. The update is
// stepped on eps with the background and its defect e0 evaluated in closed
// form through the profile, which keeps the lattice differences off the
// excision strip. Initial eps is a smooth even bump pair supported in
// [T-width, T+width], scaled so its energy norm equals delta1.
PersistenceReport run_persistence(const GlobalProfile& prof, const CutoffSpec& cutoff, double T,
                                  double delta1, double horizon_factor, const RadialGrid& grid,
                                  const PersistenceConfig& pc = {});

}  // namespace wavemap::evolve
