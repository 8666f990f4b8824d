#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "wavemap/errors.hpp"
#include "wavemap/numerics.hpp"
#include "wavemap/segment_solver.hpp"

using namespace wavemap;
namespace sg = wavemap::seg;

namespace {

double residual_sup(const sg::SegmentSolution& s, double lo, double hi) {
    double worst = 0;
    for (auto& [a, r] : sg::ode_residual(s))
        if (a >= lo && a <= hi) worst = std::max(worst, r);
    return worst;
}

double defect_sup(const sg::SegmentSolution& s, double d0) {
    double worst = 0;
    for (std::size_t j = 0; j < s.nodes.size(); ++j) {
        const double lin = s.nodes[j] == 0.0 ? 0.0 : d0 * basis::phi0(s.nodes[j]);
        worst = std::max(worst, std::abs(s.q[j] - lin));
    }
    return worst;
}

// fixture segment carrying an arbitrary closed-form profile (no linear part)
sg::SegmentSolution fixture_segment(double lo, double hi, int n, double (*f)(double),
                                    double (*fp)(double)) {
    sg::SegmentSolution s;
    s.kind = sg::SegmentKind::extension;
    s.region = basis::Region::interior;
    s.a_lo = lo;
    s.a_hi = hi;
    s.nodes.resize(n);
    s.q.resize(n);
    s.qp.resize(n);
    for (int i = 0; i < n; ++i) {
        s.nodes[i] = lo + (hi - lo) * i / (n - 1);
        s.q[i] = f(s.nodes[i]);
        s.qp[i] = fp(s.nodes[i]);
    }
    return s;
}

double ground_state(double a) { return 2.0 * std::atan(a); }
double ground_state_prime(double a) { return 2.0 / (1.0 + a * a); }

}  // namespace

TEST_CASE("config and parameter validation") {
    sg::PicardConfig cfg;
    cfg.mesh_points = 4;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = sg::PicardConfig{};
    cfg.tol = -1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = sg::PicardConfig{};
    CHECK_THROWS_AS(sg::solve_interior(0.3, cfg), RejectedParameterError);

    sg::ShootingParams p;
    p.d2 = 0.01;
    p.d3 = 0.02;  // violates the arcsine slaving
    CHECK_THROWS_AS(p.validate(0.2), RejectedParameterError);
    p.d3 = std::asin(0.04) / 4;
    CHECK_NOTHROW(p.validate(0.2));
}

TEST_CASE("interior: zero seed is the zero fixed point") {
    sg::PicardConfig cfg;
    const auto s = sg::solve_interior(0.0, cfg);
    CHECK(s.convergence.iterations == 0);
    for (double v : s.q) CHECK(v == 0.0);
    // interpolation of the zero profile
    auto [q, qp] = s.evaluate(0.237);
    CHECK(q == 0.0);
    CHECK(qp == 0.0);
}

TEST_CASE("interior: d0 = 0.01") {
    sg::PicardConfig cfg;
    const auto s = sg::solve_interior(0.01, cfg);
    CHECK(std::abs(s.q.back() - 0.00528122) < 1e-6);
    CHECK(s.qp.front() == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(s.q.front() == 0.0);
    // |h| <= d0^3 a^2 on the mesh
    for (std::size_t j = 1; j < s.nodes.size(); ++j) {
        const double h = s.q[j] - 0.01 * basis::phi0(s.nodes[j]);
        CHECK(std::abs(h) <= 1e-6 * s.nodes[j] * s.nodes[j]);
    }
    CHECK(residual_sup(s, 0.05, 0.45) < 1e-8);
    // contraction certificate
    CHECK(s.convergence.final_update_supnorm <= cfg.tol);
    CHECK(s.convergence.contraction_ratio < 1.0);
}

TEST_CASE("interior: cubic scaling of the nonlinear defect") {
    sg::PicardConfig cfg;
    const double e1 = defect_sup(sg::solve_interior(0.025, cfg), 0.025);
    const double e2 = defect_sup(sg::solve_interior(0.05, cfg), 0.05);
    const double e3 = defect_sup(sg::solve_interior(0.1, cfg), 0.1);
    CHECK(e2 / e1 == doctest::Approx(8.0).epsilon(0.2));
    CHECK(e3 / e2 == doctest::Approx(8.0).epsilon(0.2));
    CHECK(std::abs(sg::solve_interior(0.1, cfg).q.back() - 0.1 * basis::phi0(0.5)) <= 5e-3);
}

TEST_CASE("kernel orientation is settled by the residual test") {
    sg::PicardConfig cfg;
    const auto good = sg::solve_interior(0.1, cfg);
    const auto flip = sg::solve_interior(0.1, cfg, sg::KernelOrientation::flipped);
    CHECK(residual_sup(good, 0.05, 0.45) < 1e-8);
    CHECK(residual_sup(flip, 0.05, 0.45) > 1e-4);  // converges to the wrong equation

    const auto goods = sg::solve_subcone(0.02, 0.01, cfg);
    const auto flips = sg::solve_subcone(0.02, 0.01, cfg, sg::KernelOrientation::flipped);
    CHECK(residual_sup(goods, 0.55, 0.95) < 1e-8);
    CHECK(residual_sup(flips, 0.55, 0.95) > 1e-5);
}

TEST_CASE("subcone: traces and remainder envelope") {
    sg::PicardConfig cfg;
    const auto z = sg::solve_subcone(0.0, 0.0, cfg);
    for (double v : z.q) CHECK(v == 0.0);
    CHECK(z.params.d3 == 0.0);

    const auto s = sg::solve_subcone(0.02, 0.01, cfg);
    CHECK(std::abs(s.params.d3 - 0.01000267) < 1e-8);
    CHECK(std::abs(s.cone_limit() - 2.0 * s.params.d3) < 1e-8);

    // |Q - 2 d3| bounded by K (1-a)|log(1-a)| on [0.99, 1)
    double worst_ratio = 0;
    for (std::size_t j = 0; j < s.nodes.size(); ++j) {
        const double a = s.nodes[j];
        if (a < 0.99) continue;
        const double w = (1.0 - a) * std::abs(std::log(1.0 - a));
        worst_ratio = std::max(worst_ratio, std::abs(s.q[j] - 2.0 * s.params.d3) / w);
    }
    CHECK(worst_ratio < 1.0);
    CHECK(worst_ratio > 0.0);

    // remainder envelope: fitted exponent of |Q1| against (1-a) is >= 1.8
    std::vector<double> lx, ly;
    for (std::size_t j = 0; j < s.nodes.size(); ++j) {
        const double oma = 1.0 - s.nodes[j];
        if (oma > 1e-3 || oma < 1e-8) continue;
        if (std::abs(s.corr[j]) < 1e-300) continue;
        lx.push_back(std::log(oma));
        ly.push_back(std::log(std::abs(s.corr[j])));
    }
    REQUIRE(lx.size() >= 10);
    const auto fit = num::line_fit(lx, ly);
    CHECK(fit.slope >= 1.8);

    // arcsine domain error
    sg::PicardConfig wide = cfg;
    wide.smallness_bound = 0.5;
    CHECK_THROWS_AS(sg::solve_subcone(0.0, 0.26, wide), std::domain_error);
}

TEST_CASE("supercone: small mode trace") {
    sg::PicardConfig cfg;
    const auto z = sg::solve_supercone(0.0, 0.0, cfg);
    for (double v : z.q) CHECK(v == 0.0);
    const auto s = sg::solve_supercone(0.02, 0.01, cfg);
    CHECK(std::abs(s.cone_limit() - (-0.02000534)) < 1e-8);
    CHECK(residual_sup(s, 1.05, 1.95) < 1e-8);
    CHECK_THROWS_AS(sg::solve_supercone(0.5, 0.01, cfg), RejectedParameterError);
}

TEST_CASE("supercone: large mode") {
    sg::PicardConfig cfg;
    const auto s = sg::solve_supercone(100.0, 0.01, cfg);
    const double ell = s.a_hi - 1.0;
    CHECK(ell == doctest::Approx(sg::kLargeModeC / 10.0));
    double qmax = 0;
    for (double v : s.q) qmax = std::max(qmax, std::abs(v));
    CHECK(qmax >= 3.0);   // 0.3 sqrt(100)
    CHECK(qmax <= 30.0);  // 3 sqrt(100)
    auto [qstar, qstarp] = s.evaluate(1.0 + ell / 2);
    CHECK(std::abs(qstar) >= 3.0);
    CHECK(std::abs(qstar) <= 30.0);

    // interval constant above the calibrated one violates the bound
    CHECK_THROWS_AS(sg::solve_supercone_with_c(10.0, 0.01, cfg, 1.0), BootstrapViolationError);
}

TEST_CASE("large-mode interval constant matches the calibration ladder") {
    sg::PicardConfig cfg;
    const std::vector<double> d1ts = {10.0, 100.0, 1000.0};
    CHECK(sg::calibrate_large_mode_c(cfg, d1ts) == sg::kLargeModeC);
}

TEST_CASE("far field") {
    sg::PicardConfig cfg;
    const auto z = sg::solve_farfield(0.0, 0.0, cfg);
    for (double v : z.q) CHECK(v == 0.0);

    const auto s = sg::solve_farfield(0.01, 0.01, cfg);
    CHECK(std::abs(s.q.front() - (-0.0107396)) < 1e-5);
    CHECK(s.convergence.tail_bound < cfg.tol);
    CHECK(residual_sup(s, 2.0, 1000.0) < 1e-8);

    // weighted remainder against the linear part stays bounded on [10, 1000]
    const auto s2 = sg::solve_farfield(0.01, 0.005, cfg);
    double env = 0;
    for (std::size_t j = 0; j < s2.nodes.size(); ++j) {
        const double a = s2.nodes[j];
        if (a < 10.0) continue;
        const double lin = 0.01 * basis::phi1_ext(a) + 0.005 * basis::phi2_ext(a);
        env = std::max(env, a * a * std::abs(s2.q[j] - lin));
    }
    CHECK(env > 0.0);
    CHECK(env < 1e-3);

    // a coarse truncation radius makes the tail bound dominate
    sg::PicardConfig tight = cfg;
    tight.farfield_cutoff = 2.5;
    CHECK_THROWS_AS(sg::solve_farfield(0.1, 0.1, tight), TruncationDominatedError);
}

TEST_CASE("odd symmetry of the segment solvers") {
    sg::PicardConfig cfg;
    const auto a = sg::solve_interior(0.05, cfg);
    const auto b = sg::solve_interior(-0.05, cfg);
    for (std::size_t j = 0; j < a.q.size(); j += 97) CHECK(std::abs(a.q[j] + b.q[j]) < 1e-12);

    const auto c = sg::solve_subcone(0.02, 0.01, cfg);
    const auto d = sg::solve_subcone(-0.02, -0.01, cfg);
    for (std::size_t j = 0; j < c.q.size(); j += 97) CHECK(std::abs(c.q[j] + d.q[j]) < 1e-12);

    const auto e = sg::solve_farfield(0.01, 0.005, cfg);
    const auto f = sg::solve_farfield(-0.01, -0.005, cfg);
    for (std::size_t j = 0; j < e.q.size(); j += 97) CHECK(std::abs(e.q[j] + f.q[j]) < 1e-12);
}

TEST_CASE("evaluate: nodes exact, interpolation self-convergence") {
    sg::PicardConfig cfg;
    cfg.mesh_points = 201;
    const auto coarse = sg::solve_subcone(0.02, 0.01, cfg);
    cfg.mesh_points = 401;
    const auto fine = sg::solve_subcone(0.02, 0.01, cfg);

    // node values are reproduced exactly
    for (std::size_t j = 0; j < coarse.nodes.size(); j += 13)
        CHECK(coarse.evaluate(coarse.nodes[j]).first == coarse.q[j]);

    double change = 0;
    for (std::size_t j = 10; j + 1 < coarse.nodes.size(); j += 7) {
        const double mid = 0.5 * (coarse.nodes[j] + coarse.nodes[j + 1]);
        change = std::max(change, std::abs(coarse.evaluate(mid).first - fine.evaluate(mid).first));
    }
    CHECK(change < 4.0 * std::max(coarse.convergence.interp_error_bound, 1e-14));
    CHECK_THROWS_AS(coarse.evaluate(0.3), std::domain_error);
    CHECK_THROWS_AS(coarse.evaluate(1.5), std::domain_error);
}

TEST_CASE("ode_residual oracles") {
    // zero profile
    sg::PicardConfig cfg;
    const auto z = sg::solve_interior(0.0, cfg);
    for (auto& [a, r] : sg::ode_residual(z)) CHECK(r == 0.0);

    // the closed-form ground state annihilates the equation
    // h balances FD truncation against the rounding of the stored samples
    const auto fx = fixture_segment(0.05, 0.95, 1201, ground_state, ground_state_prime);
    CHECK(residual_sup(fx, 0.1, 0.9) < 1e-8);
}

TEST_CASE("outward extension reproduces the ground state") {
    // seed an exterior fixture with 2 atan(a) on [1.5, 2] and integrate out
    sg::SegmentSolution src;
    src.kind = sg::SegmentKind::extension;
    src.region = basis::Region::exterior;
    src.a_lo = 1.5;
    src.a_hi = 2.0;
    const int n = 33;
    src.nodes.resize(n);
    src.q.resize(n);
    src.qp.resize(n);
    for (int i = 0; i < n; ++i) {
        src.nodes[i] = 1.5 + 0.5 * i / (n - 1);
        src.q[i] = ground_state(src.nodes[i]);
        src.qp[i] = ground_state_prime(src.nodes[i]);
    }
    const auto ext = sg::extend_outward(src, 50.0, 501);
    for (std::size_t j = 0; j < ext.nodes.size(); j += 17)
        CHECK(std::abs(ext.q[j] - ground_state(ext.nodes[j])) < 1e-9);
    CHECK(residual_sup(ext, 2.5, 49.0) < 1e-6);
}

TEST_CASE("interior fixed point agrees with direct shooting integration") {
    // independent oracle: integrate the equation outward from a small offset
    // with the linear-part initial data by classical RK4
    sg::PicardConfig cfg;
    const double d0 = 0.05;
    const auto s = sg::solve_interior(d0, cfg);

    const double a0 = 1e-4;
    double y0 = d0 * basis::phi0(a0), y1 = d0 * basis::phi0_prime(a0);
    auto rhs = [](double a, double q, double qp, double& f0, double& f1) {
        f0 = qp;
        f1 = sg::ode_second_derivative(a, q, qp);
    };
    const int steps = 20000;
    const double h = (0.5 - a0) / steps;
    double a = a0;
    for (int k = 0; k < steps; ++k) {
        double k1[2], k2[2], k3[2], k4[2];
        rhs(a, y0, y1, k1[0], k1[1]);
        rhs(a + h / 2, y0 + h / 2 * k1[0], y1 + h / 2 * k1[1], k2[0], k2[1]);
        rhs(a + h / 2, y0 + h / 2 * k2[0], y1 + h / 2 * k2[1], k3[0], k3[1]);
        rhs(a + h, y0 + h * k3[0], y1 + h * k3[1], k4[0], k4[1]);
        y0 += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
        y1 += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
        a += h;
    }
    CHECK(std::abs(y0 - s.q.back()) < 1e-9);
    CHECK(std::abs(y1 - s.qp.back()) < 1e-8);
}

TEST_CASE("contraction certificate: updates are roughly geometric") {
    sg::PicardConfig cfg;
    cfg.tol = 1e-14;
    const auto s = sg::solve_interior(0.15, cfg);
    const auto& h = s.convergence.update_history;
    REQUIRE(h.size() >= 3);
    // stored ratio reproduces the last two update norms
    CHECK(s.convergence.contraction_ratio ==
          doctest::Approx(h[h.size() - 1] / h[h.size() - 2]).epsilon(0.1));
    // successive ratios stay below one and within a modest band of each other
    std::vector<double> ratios;
    for (std::size_t k = 1; k < h.size(); ++k) {
        if (h[k] < 1e-13) break;  // rounding floor
        ratios.push_back(h[k] / h[k - 1]);
    }
    REQUIRE(ratios.size() >= 2);
    double lo = ratios[0], hi = ratios[0];
    for (double r : ratios) {
        CHECK(r < 1.0);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    CHECK(hi / lo < 3.0);
}

TEST_CASE("grading exponent clusters nodes without changing the solution") {
    sg::PicardConfig cfg;
    const auto s1 = sg::solve_subcone(0.02, 0.01, cfg);
    cfg.grading_exponent = 2.0;
    const auto s2 = sg::solve_subcone(0.02, 0.01, cfg);
    for (double a : {0.6, 0.9, 0.999, 1.0 - 1e-6})
        CHECK(s1.evaluate(a).first == doctest::Approx(s2.evaluate(a).first).epsilon(1e-9));
    // more nodes land near the cone under the stronger grading
    int n1 = 0, n2 = 0;
    for (double a : s1.nodes) n1 += a > 1.0 - 1e-6;
    for (double a : s2.nodes) n2 += a > 1.0 - 1e-6;
    CHECK(n2 > n1);
}

TEST_CASE("diverged iteration carries the ratio") {
    sg::PicardConfig cfg;
    cfg.max_iter = 1;  // the first correction sweep cannot reach tol
    bool threw = false;
    try {
        (void)sg::solve_interior(0.1, cfg);
    } catch (const DivergedIterationError& e) {
        threw = true;
        CHECK(e.ratio >= 0.0);
    }
    CHECK(threw);
}
