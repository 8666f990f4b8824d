#include <doctest.h>

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "wavemap/evolve.hpp"

using namespace wavemap;
namespace ev = wavemap::evolve;
namespace sg = wavemap::seg;

namespace {

// exact free radial wave from an even compact pulse
double pulse(double x) {
    const double y = (std::abs(x) - 30.0) / 8.0;
    return std::abs(y) < 1.0 ? std::pow(1.0 - y * y, 4) : 0.0;
}
double pulse_prime(double x) {
    const double s = x < 0 ? -1.0 : 1.0;
    const double y = (std::abs(x) - 30.0) / 8.0;
    return std::abs(y) < 1.0 ? -s * y * std::pow(1.0 - y * y, 3) : 0.0;
}
double dalembert(double t, double r) { return (pulse(r - t) - pulse(r + t)) / r; }
double dalembert_t(double t, double r) { return (-pulse_prime(r - t) - pulse_prime(r + t)) / r; }

double free_wave_error(int n) {
    ev::RadialGrid grid{80.0, n};
    const double h = grid.h();
    ev::WaveState s;
    s.t = 0;
    s.u.assign(n + 1, 0.0);
    s.ut.assign(n + 1, 0.0);
    for (int i = 1; i <= n; ++i) {
        s.u[i] = dalembert(0, i * h);
        s.ut[i] = dalembert_t(0, i * h);
    }
    ev::StepOptions opt;
    opt.nonlinear = false;
    const int steps = static_cast<int>(std::ceil(10.0 / (0.4 * h)));
    const double dt = 10.0 / steps;
    for (int k = 0; k < steps; ++k) s = ev::step(s, dt, grid, opt);
    double err = 0;
    for (int i = 1; i <= n; ++i) err = std::max(err, std::abs(s.u[i] - dalembert(s.t, i * h)));
    return err;
}

double ground_state_error(int n) {
    const double T = 1.0, rmax = 8.0;
    ev::RadialGrid grid{rmax, n};
    const double h = grid.h();
    ev::WaveState s;
    s.t = T;
    s.u.assign(n + 1, 0.0);
    s.ut.assign(n + 1, 0.0);
    for (int i = 1; i <= n; ++i) {
        const double r = i * h;
        s.u[i] = 2.0 * std::atan(r / T);
        s.ut[i] = -2.0 * r / (T * T + r * r);
    }
    ev::StepOptions opt;
    opt.boundary = [&](double t) {
        return std::pair<double, double>{2.0 * std::atan(rmax / t),
                                         -2.0 * rmax / (t * t + rmax * rmax)};
    };
    const int steps = static_cast<int>(std::ceil(T / (0.4 * h)));
    const double dt = T / steps;
    for (int k = 0; k < steps; ++k) s = ev::step(s, dt, grid, opt);
    double err = 0;
    for (int i = 1; i <= n; ++i)
        err = std::max(err, std::abs(s.u[i] - 2.0 * std::atan(i * h / s.t)));
    return err;
}

double closed_run_drift(int n) {
    ev::RadialGrid grid{100.0, n};
    const double h = grid.h();
    ev::WaveState s;
    s.t = 0;
    s.u.assign(n + 1, 0.0);
    s.ut.assign(n + 1, 0.0);
    for (int i = 1; i <= n; ++i) {
        const double y = (i * h - 40.0) / 12.0;
        if (std::abs(y) < 1) s.u[i] = 0.5 * std::pow(1 - y * y, 4);
    }
    const double e0 = ev::energy(s, grid);
    for (int k = 0; k < 1000; ++k) s = ev::step(s, 0.5 * h, grid);
    return std::abs(ev::energy(s, grid) - e0) / e0;
}

}  // namespace

TEST_CASE("grid validation and CFL guard") {
    ev::RadialGrid bad{10.0, 8};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    ev::RadialGrid g{10.0, 64};
    ev::WaveState s;
    s.u.assign(65, 0.0);
    s.ut.assign(65, 0.0);
    CHECK_THROWS_AS(ev::step(s, g.h(), g), std::invalid_argument);  // dt > 0.5 h
}

TEST_CASE("zero data stay zero") {
    ev::RadialGrid g{10.0, 64};
    ev::WaveState s;
    s.u.assign(65, 0.0);
    s.ut.assign(65, 0.0);
    s = ev::step(s, 0.4 * g.h(), g);
    for (double v : s.u) CHECK(v == 0.0);
    CHECK(ev::energy(s, g) == 0.0);
    CHECK_FALSE(s.blowup);
}

TEST_CASE("free radial wave is reproduced at second order") {
    const double e1 = free_wave_error(1024);
    const double e2 = free_wave_error(2048);
    CHECK(e1 < 1e-4);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("the ground-state similarity field is tracked at second order") {
    const double e1 = ground_state_error(2048);
    const double e2 = ground_state_error(4096);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.3));
    CHECK(e2 < 2e-4);
}

TEST_CASE("closed nonlinear run conserves energy") {
    const double d1 = closed_run_drift(2048);
    const double d2 = closed_run_drift(4096);
    CHECK(d2 < 1e-4);
    CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.8));  // drift ~ h^2
    // energy is nonnegative on arbitrary states
    ev::RadialGrid g{10.0, 64};
    ev::WaveState s;
    s.u.assign(65, 0.3);
    s.ut.assign(65, -0.2);
    s.u[0] = 0.0;
    CHECK(ev::energy(s, g) >= 0.0);
}

TEST_CASE("finite speed of propagation") {
    const int n = 2048;
    ev::RadialGrid grid{100.0, n};
    const double h = grid.h();
    ev::WaveState s;
    s.t = 0;
    s.u.assign(n + 1, 0.0);
    s.ut.assign(n + 1, 0.0);
    const double c = 15.0, sig = 2.0, r0 = c + 12 * sig;
    for (int i = 1; i <= n; ++i) {
        const double y = (i * h - c) / sig;
        if (std::abs(y) < 12) s.u[i] = 0.3 * std::exp(-0.5 * y * y);
    }
    const double dt = 0.5 * h, delta = 20.0;
    for (int k = 0; k < static_cast<int>(delta / dt); ++k) s = ev::step(s, dt, grid);
    double beyond = 0;
    for (int i = 0; i <= n; ++i)
        if (i * h > r0 + s.t + 2 * h) beyond = std::max(beyond, std::abs(s.u[i]));
    CHECK(beyond < 1e-12);
}

TEST_CASE("perturbation norms") {
    ev::RadialGrid g{50.0, 512};
    const int n = g.n;
    const double h = g.h();
    std::vector<double> eps(n + 1, 0.0), eps_t(n + 1, 0.0);
    auto pn0 = ev::perturbation_norms(g, eps, eps_t);
    CHECK(pn0.sup == 0.0);
    CHECK(pn0.energy == 0.0);
    CHECK(pn0.l2 == 0.0);
    CHECK(pn0.l2_5d == 0.0);

    for (int i = 1; i <= n; ++i) {
        const double y = (i * h - 25.0) / 5.0;
        if (std::abs(y) < 1) {
            eps[i] = std::pow(1 - y * y, 3);
            eps_t[i] = 0.5 * eps[i];
        }
    }
    const auto a = ev::perturbation_norms(g, eps, eps_t);
    // degree-one homogeneity
    std::vector<double> e2(eps), et2(eps_t);
    for (auto& v : e2) v *= -2.5;
    for (auto& v : et2) v *= -2.5;
    const auto b = ev::perturbation_norms(g, e2, et2);
    CHECK(b.sup == doctest::Approx(2.5 * a.sup).epsilon(1e-12));
    CHECK(b.energy == doctest::Approx(2.5 * a.energy).epsilon(1e-12));
    CHECK(b.l2 == doctest::Approx(2.5 * a.l2).epsilon(1e-12));
    // the 5-D proxy through v = eps/r equals the 3-D weighted norm
    CHECK(std::abs(a.l2_5d - a.l2) < 1e-8 * (1.0 + a.l2));
}

TEST_CASE("persistence run: report structure and consistency with the defect") {
    sg::PicardConfig cfg;
    const auto prof = match::glue_at_cone(0.0, sg::ProfileMode::small, 0.02, cfg);
    approx::CutoffSpec cut{1.0};
    ev::RadialGrid grid{260.0, 2048};

    // pure background data: the perturbation stays bounded by the
    // accumulated defect forcing, shaped like 1/T - 1/t
    auto rep = ev::run_persistence(prof, cut, 50.0, 0.0, 4.0, grid);
    CHECK_FALSE(rep.blowup);
    CHECK(rep.horizon == doctest::Approx(200.0));
    CHECK(rep.times.size() == rep.sup_eps.size());
    CHECK(rep.times.size() == rep.energy_eps.size());
    CHECK(rep.times.size() == rep.energy_total.size());
    REQUIRE(rep.times.size() >= 8);
    // the ratio sup_eps / (1/T - 1/t) does not grow at late times, i.e. the
    // response stays inside a fixed envelope of the accumulated forcing
    double early = 0, late = 0;
    for (std::size_t i = 0; i < rep.times.size(); ++i) {
        if (rep.times[i] < 51.0) continue;
        const double envelope = 1.0 / 50.0 - 1.0 / rep.times[i];
        const double ratio = rep.sup_eps[i] / envelope;
        if (rep.times[i] < 125.0)
            early = std::max(early, ratio);
        else
            late = std::max(late, ratio);
    }
    CHECK(late <= 1.5 * early);
    CHECK(rep.sup_eps.back() < 1e-4);

    // perturbed data: norms are seeded at delta1
    auto rep2 = ev::run_persistence(prof, cut, 50.0, 1e-3, 2.0, grid);
    CHECK(rep2.energy_eps.front() == doctest::Approx(1e-3).epsilon(1e-10));
    CHECK_FALSE(rep2.blowup);

    // a huge perturbation may flag, but the report must stay well formed
    auto rep3 = ev::run_persistence(prof, cut, 50.0, 10.0, 1.5, grid);
    CHECK(rep3.times.size() == rep3.energy_eps.size());
    CHECK(rep3.horizon <= 75.0 + 1e-9);
    if (rep3.blowup) CHECK(rep3.blowup_time > 50.0);

    // residual-dominates-delta1 configuration error
    CHECK_THROWS_AS(ev::run_persistence(prof, cut, 50.0, 1e-12, 2.0, grid),
                    std::invalid_argument);

    // the forward cone must stay inside the grid
    ev::RadialGrid shallow{120.0, 1024};
    CHECK_THROWS_AS(ev::run_persistence(prof, cut, 50.0, 1e-3, 4.0, shallow),
                    std::invalid_argument);
}
