#include "wavemap/segment_solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include "wavemap/errors.hpp"
#include "wavemap/numerics.hpp"

namespace wavemap::seg {

namespace bs = wavemap::basis;

namespace {

double arcsine_slave(double d2, const char* who) {
    if (std::abs(4.0 * d2) > 1.0)
        throw std::domain_error(std::string(who) + ": |4 d2| exceeds 1, arcsine undefined");
    return std::asin(4.0 * d2) / 4.0;
}

void check_small(double v, double bound, const char* name) {
    if (!(std::abs(v) <= bound))
        throw RejectedParameterError(std::string(name) + " = " + std::to_string(v) +
                                     " exceeds the smallness bound " + std::to_string(bound));
}

struct Mesh {
    std::vector<double> a;    // ascending nodes
    std::vector<double> jac;  // da/dxi at nodes, xi the uniform coordinate
    double dxi = 0;
};

// Uniform mesh in a.
Mesh mesh_uniform(double lo, double hi, int n) {
    Mesh m;
    m.a.resize(n);
    m.jac.assign(n, hi - lo);
    m.dxi = 1.0 / (n - 1);
    for (int j = 0; j < n; ++j) m.a[j] = lo + (hi - lo) * j / (n - 1);
    m.a.back() = hi;
    return m;
}

// Nodes exponentially graded toward a = 1 from below: a = 1 - exp(-s),
// s from log(1/(1-lo)) to log(1/offset), with optional extra clustering
// s(xi) = s_lo + (s_hi - s_lo)(1 - (1-xi)^p).
Mesh mesh_toward_cone_below(double lo, double offset, int n, double p) {
    Mesh m;
    m.a.resize(n);
    m.jac.resize(n);
    m.dxi = 1.0 / (n - 1);
    const double s_lo = -std::log1p(-lo);       // = log(1/(1-lo))
    const double s_hi = -std::log(offset);
    for (int j = 0; j < n; ++j) {
        const double xi = static_cast<double>(j) / (n - 1);
        const double om = 1.0 - xi;
        const double s = s_hi - (s_hi - s_lo) * std::pow(om, p);
        const double one_minus_a = std::exp(-s);
        m.a[j] = 1.0 - one_minus_a;
        m.jac[j] = one_minus_a * (s_hi - s_lo) * p * std::pow(om, p - 1.0);
    }
    m.a.front() = lo;
    return m;
}

// Mirrored grading from above: a = 1 + exp(-s), ascending in a, clustered
// toward a = 1 (xi = 0 end).
Mesh mesh_toward_cone_above(double offset, double hi, int n, double p) {
    Mesh m;
    m.a.resize(n);
    m.jac.resize(n);
    m.dxi = 1.0 / (n - 1);
    const double lambda = std::log((hi - 1.0) / offset);
    for (int j = 0; j < n; ++j) {
        const double xi = static_cast<double>(j) / (n - 1);
        const double tau = std::pow(xi, p);
        const double am1 = offset * std::exp(lambda * tau);
        m.a[j] = 1.0 + am1;
        m.jac[j] = am1 * lambda * p * (p == 1.0 ? 1.0 : std::pow(xi, p - 1.0));
    }
    m.a.back() = hi;
    return m;
}

// Log-spaced mesh on [lo, hi].
Mesh mesh_log(double lo, double hi, int n) {
    Mesh m;
    m.a.resize(n);
    m.jac.resize(n);
    m.dxi = 1.0 / (n - 1);
    const double lambda = std::log(hi / lo);
    for (int j = 0; j < n; ++j) {
        const double xi = static_cast<double>(j) / (n - 1);
        m.a[j] = lo * std::exp(lambda * xi);
        m.jac[j] = m.a[j] * lambda;
    }
    m.a.back() = hi;
    return m;
}

double cubic_interp_bound(const std::vector<double>& x, const std::vector<double>& q) {
    // Hermite error f''''/384 * w^4; f'''' estimated by divided differences.
    const std::size_t n = x.size();
    if (n < 5) return 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i + 4 < n; ++i) {
        // 4th divided difference over x[i..i+4]
        double dd[5];
        for (int k = 0; k < 5; ++k) dd[k] = q[i + k];
        for (int ord = 1; ord <= 4; ++ord)
            for (int k = 0; k + ord < 5; ++k)
                dd[k] = (dd[k + 1] - dd[k]) / (x[i + k + ord] - x[i + k]);
        const double f4 = 24.0 * std::abs(dd[0]);
        for (int k = 0; k < 4; ++k) {
            const double w = x[i + k + 1] - x[i + k];
            worst = std::max(worst, f4 * w * w * w * w / 384.0);
        }
    }
    return worst;
}

struct PicardProblem {
    Mesh mesh;
    bool exterior = false;
    int anchor = 0;  // node index the correction integral starts from
    std::function<double(double)> lin, lin_prime;
    // numerator of the forcing at node j given the current iterate value
    std::function<double(int, double)> numerator;
    // per-sweep extra tail contributions to the two cumulative integrals
    // (constants added to A and B); far field only
    std::function<std::pair<double, double>(std::span<const double>)> tail =
        nullptr;
    double sign = 1.0;  // +1 residual-selected, -1 flipped
};

struct PicardOutcome {
    std::vector<double> q, qp, psi, psip;
    Convergence conv;
};

PicardOutcome picard_run(const PicardProblem& pb, const PicardConfig& cfg) {
    const int n = static_cast<int>(pb.mesh.a.size());
    const auto& a = pb.mesh.a;

    auto f1 = pb.exterior ? bs::phi1_ext : bs::phi1;
    auto f2 = pb.exterior ? bs::phi2_ext : bs::phi2;
    auto f1p = pb.exterior ? bs::phi1_ext_prime : bs::phi1_prime;
    auto f2p = pb.exterior ? bs::phi2_ext_prime : bs::phi2_prime;

    std::vector<double> linv(n), phi1v(n), phi2v(n), pfac(n), rfac(n);
    for (int j = 0; j < n; ++j) {
        linv[j] = pb.lin(a[j]);
        const bool origin = !pb.exterior && a[j] == 0.0;
        phi1v[j] = origin ? 0.0 : f1(a[j]);
        phi2v[j] = origin ? 0.0 : f2(a[j]);
        // phi1(b) b^2/4 and phi2(b) b^2/4
        pfac[j] = pb.exterior ? (a[j] * a[j] - 1.0) / 4.0 : (1.0 - a[j] * a[j]) / 4.0;
        rfac[j] = origin ? 0.0 : phi2v[j] * a[j] * a[j] / 4.0;
    }

    std::vector<double> q = linv, gp(n), gr(n), cum_p, cum_r, A(n), B(n);
    std::vector<double> history;
    double prev_update = std::numeric_limits<double>::infinity();
    double last_ratio = 0.0;
    int sweeps = 0;
    bool converged = false;
    double final_update = 0.0;

    for (int it = 1; it <= cfg.max_iter; ++it) {
        ++sweeps;
        for (int j = 0; j < n; ++j) {
            const double nm = pb.numerator(j, q[j]);
            // weight jac/(b^2 (1-b^2)) is folded by the caller into numerator
            gp[j] = pfac[j] * nm;
            gr[j] = rfac[j] * nm;
        }
        const bool from_top = pb.anchor == n - 1;
        if (from_top) {
            cum_p = num::cumulative_uniform_suffix(gp, pb.mesh.dxi);
            cum_r = num::cumulative_uniform_suffix(gr, pb.mesh.dxi);
        } else {
            cum_p = num::cumulative_uniform(gp, pb.mesh.dxi);
            cum_r = num::cumulative_uniform(gr, pb.mesh.dxi);
        }
        double tA = 0.0, tB = 0.0;
        if (pb.tail) {
            auto [j1, j2] = pb.tail(q);
            tA = j1;
            tB = j2;
        }
        const double baseP = from_top ? 0.0 : cum_p[pb.anchor];
        const double baseR = from_top ? 0.0 : cum_r[pb.anchor];
        const double sgn = from_top ? -1.0 : 1.0;
        double update = 0.0;
        for (int j = 0; j < n; ++j) {
            A[j] = sgn * cum_p[j] - baseP - tA;
            B[j] = sgn * cum_r[j] - baseR - tB;
            double psi;
            if (!pb.exterior && a[j] == 0.0)
                psi = 0.0;  // correction vanishes like a^3 at the origin
            else
                psi = pb.sign * (phi2v[j] * A[j] - phi1v[j] * B[j]);
            const double qn = linv[j] + psi;
            update = std::max(update, std::abs(qn - q[j]));
            q[j] = qn;
        }
        final_update = update;
        history.push_back(update);
        if (it >= 2) last_ratio = prev_update > 0 ? update / prev_update : 0.0;
        if (update <= cfg.tol) {
            converged = true;
            break;
        }
        if (it >= 3 && last_ratio >= 1.0 && update > 100.0 * cfg.tol)
            throw DivergedIterationError(
                "picard iteration stopped contracting (ratio " + std::to_string(last_ratio) + ")",
                last_ratio);
        prev_update = update;
    }
    if (!converged)
        throw DivergedIterationError(
            "picard iteration did not reach tol within max_iter (last ratio " +
                std::to_string(last_ratio) + ")",
            last_ratio);

    PicardOutcome out;
    out.q = q;
    out.qp.resize(n);
    out.psi.resize(n);
    out.psip.resize(n);
    for (int j = 0; j < n; ++j) {
        if (!pb.exterior && a[j] == 0.0) {
            out.qp[j] = pb.lin_prime(a[j]);
            out.psi[j] = 0.0;
            out.psip[j] = 0.0;
            continue;
        }
        out.psi[j] = pb.sign * (phi2v[j] * A[j] - phi1v[j] * B[j]);
        out.psip[j] = pb.sign * (f2p(a[j]) * A[j] - f1p(a[j]) * B[j]);
        out.qp[j] = pb.lin_prime(a[j]) + out.psip[j];
    }
    out.conv.iterations = std::max(0, sweeps - 1);
    out.conv.final_update_supnorm = final_update;
    out.conv.contraction_ratio = last_ratio;
    out.conv.update_history = std::move(history);
    return out;
}

double sign_of(KernelOrientation ko) {
    return ko == KernelOrientation::residual_selected ? 1.0 : -1.0;
}

}  // namespace

void ShootingParams::validate(double smallness_bound) const {
    if (d2 != 0 || d3 != 0) {
        if (std::abs(std::sin(4.0 * d3) - 4.0 * d2) > 1e-12)
            throw RejectedParameterError("sin(4 d3) = 4 d2 violated");
    }
    if (d2t != 0 || d3t != 0) {
        if (std::abs(std::sin(4.0 * d3t) - 4.0 * d2t) > 1e-12)
            throw RejectedParameterError("sin(4 d3t) = 4 d2t violated");
    }
    check_small(d0, smallness_bound, "d0");
    check_small(d1, smallness_bound, "d1");
    check_small(d2, smallness_bound, "d2");
    check_small(d2t, smallness_bound, "d2t");
    check_small(q1, smallness_bound, "q1");
    check_small(q2, smallness_bound, "q2");
    if (mode == ProfileMode::small) check_small(d1t, 1.0, "d1t");
}

void PicardConfig::validate() const {
    if (mesh_points < 16) throw std::invalid_argument("mesh_points must be >= 16");
    if (!(grading_exponent >= 1.0)) throw std::invalid_argument("grading_exponent must be >= 1");
    if (!(endpoint_offset > 0.0)) throw std::invalid_argument("endpoint_offset must be positive");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be positive");
    if (!(farfield_cutoff > 2.0)) throw std::invalid_argument("farfield_cutoff must exceed 2");
    if (!(smallness_bound > 0.0)) throw std::invalid_argument("smallness_bound must be positive");
}

namespace {

std::pair<double, double> hermite_eval(const std::vector<double>& x, const std::vector<double>& v,
                                       const std::vector<double>& vp, double a) {
    auto it = std::lower_bound(x.begin(), x.end(), a);
    std::size_t i = it - x.begin();
    if (i < x.size() && x[i] == a) return {v[i], vp[i]};
    if (i == 0) i = 1;
    if (i == x.size()) i = x.size() - 1;
    const double x0 = x[i - 1], x1 = x[i];
    const double w = x1 - x0, t = (a - x0) / w;
    const double v0 = v[i - 1], v1 = v[i], m0 = vp[i - 1] * w, m1 = vp[i] * w;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    const double val = h00 * v0 + h10 * m0 + h01 * v1 + h11 * m1;
    const double d00 = 6 * t2 - 6 * t, d10 = 3 * t2 - 4 * t + 1;
    const double d01 = -6 * t2 + 6 * t, d11 = 3 * t2 - 2 * t;
    const double der = (d00 * v0 + d10 * m0 + d01 * v1 + d11 * m1) / w;
    return {val, der};
}

}  // namespace

double SegmentSolution::lin_phi_part(double a) const {
    switch (kind) {
        case SegmentKind::interior:
            return a == 0.0 ? 0.0 : params.d0 * bs::phi0(a);
        case SegmentKind::subcone:
            return params.d1 * bs::phi1(a) + params.d2 * bs::phi2(a);
        case SegmentKind::supercone:
            return params.d1t * bs::phi1_ext(a) + params.d2t * bs::phi2_ext(a);
        case SegmentKind::farfield:
            return params.q1 * bs::phi1_ext(a) + params.q2 * bs::phi2_ext(a);
        case SegmentKind::extension:
            return 0.0;
    }
    return 0.0;
}

double SegmentSolution::lin_value(double a) const {
    switch (kind) {
        case SegmentKind::subcone:
            return lin_phi_part(a) + (params.d3 - params.d2) * 2.0 / a;
        case SegmentKind::supercone:
            return lin_phi_part(a) - (params.d3t - params.d2t) * 2.0 / a;
        default:
            return lin_phi_part(a);
    }
}

double SegmentSolution::lin_prime(double a) const {
    switch (kind) {
        case SegmentKind::interior:
            return a == 0.0 ? params.d0 : params.d0 * bs::phi0_prime(a);
        case SegmentKind::subcone:
            return params.d1 * bs::phi1_prime(a) + params.d2 * bs::phi2_prime(a) -
                   (params.d3 - params.d2) * 2.0 / (a * a);
        case SegmentKind::supercone:
            return params.d1t * bs::phi1_ext_prime(a) + params.d2t * bs::phi2_ext_prime(a) +
                   (params.d3t - params.d2t) * 2.0 / (a * a);
        case SegmentKind::farfield:
            return params.q1 * bs::phi1_ext_prime(a) + params.q2 * bs::phi2_ext_prime(a);
        case SegmentKind::extension:
            return 0.0;
    }
    return 0.0;
}

std::pair<double, double> SegmentSolution::evaluate_correction(double a) const {
    if (corr.empty()) {
        auto [v, d] = hermite_eval(nodes, q, qp, a);
        return {v - lin_value(a), d - lin_prime(a)};
    }
    return hermite_eval(nodes, corr, corrp, a);
}

std::pair<double, double> SegmentSolution::evaluate(double a) const {
    const double slack = 1e-12 * std::max(1.0, std::abs(a_hi));
    if (a < a_lo - slack || a > a_hi + slack)
        throw std::domain_error("SegmentSolution::evaluate: a outside [" + std::to_string(a_lo) +
                                ", " + std::to_string(a_hi) + "]");
    a = std::clamp(a, nodes.front(), nodes.back());
    if (corr.empty()) return hermite_eval(nodes, q, qp, a);
    auto [cv, cd] = hermite_eval(nodes, corr, corrp, a);
    return {lin_value(a) + cv, lin_prime(a) + cd};
}

double SegmentSolution::cone_limit() const {
    if (kind == SegmentKind::subcone) {
        const double rem = corr.empty() ? q.back() - lin_value(nodes.back()) : corr.back();
        return 2.0 * params.d3 + rem;
    }
    if (kind == SegmentKind::supercone) {
        const double rem = corr.empty() ? q.front() - lin_value(nodes.front()) : corr.front();
        return -2.0 * params.d3t + rem;
    }
    throw std::logic_error("cone_limit: segment does not touch the cone");
}

SegmentSolution solve_interior(double d0, const PicardConfig& cfg, KernelOrientation ko) {
    cfg.validate();
    check_small(d0, cfg.smallness_bound, "d0");

    PicardProblem pb;
    pb.mesh = mesh_uniform(0.0, 0.5, cfg.mesh_points);
    pb.exterior = false;
    pb.anchor = 0;
    pb.sign = sign_of(ko);
    pb.lin = [d0](double a) { return a == 0.0 ? 0.0 : d0 * bs::phi0(a); };
    pb.lin_prime = [d0](double a) {
        return a == 0.0 ? d0 : d0 * bs::phi0_prime(a);
    };
    const auto& mesh = pb.mesh;
    pb.numerator = [&mesh](int j, double qv) {
        const double b = mesh.a[j];
        if (b == 0.0) return 0.0;
        // (sin 2Q - 2Q) / (b^2 (1-b^2)) * da/dxi
        return bs::sin2q_minus_2q(qv) / (b * b * (1.0 - b * b)) * mesh.jac[j];
    };

    auto out = picard_run(pb, cfg);
    SegmentSolution s;
    s.kind = SegmentKind::interior;
    s.region = bs::Region::interior;
    s.a_lo = 0.0;
    s.a_hi = 0.5;
    s.nodes = pb.mesh.a;
    s.q = std::move(out.q);
    s.qp = std::move(out.qp);
    s.corr = std::move(out.psi);
    s.corrp = std::move(out.psip);
    s.params.d0 = d0;
    s.convergence = out.conv;
    s.convergence.interp_error_bound =
        cubic_interp_bound(s.nodes, s.corr.empty() ? s.q : s.corr);
    return s;
}

SegmentSolution solve_subcone(double d1, double d2, const PicardConfig& cfg,
                              KernelOrientation ko) {
    cfg.validate();
    check_small(d1, cfg.smallness_bound, "d1");
    check_small(d2, cfg.smallness_bound, "d2");
    const double d3 = arcsine_slave(d2, "solve_subcone");

    PicardProblem pb;
    pb.mesh = mesh_toward_cone_below(0.5, cfg.endpoint_offset, cfg.mesh_points,
                                     cfg.grading_exponent);
    pb.exterior = false;
    pb.anchor = cfg.mesh_points - 1;
    pb.sign = sign_of(ko);
    pb.lin = [d1, d2, d3](double a) {
        return d1 * bs::phi1(a) + d2 * bs::phi2(a) + (d3 - d2) * 2.0 / a;
    };
    pb.lin_prime = [d1, d2, d3](double a) {
        return d1 * bs::phi1_prime(a) + d2 * bs::phi2_prime(a) - (d3 - d2) * 2.0 / (a * a);
    };
    const auto& mesh = pb.mesh;
    const double p = cfg.grading_exponent;
    const double s_span = -std::log(cfg.endpoint_offset) + std::log1p(-0.5);
    auto lin = pb.lin;
    pb.numerator = [&mesh, d1, d2, lin, p, s_span](int j, double qv) {
        const double b = mesh.a[j];
        const double q0b = d1 * bs::phi1(b) + d2 * bs::phi2(b);
        const double q1b = qv - lin(b);
        const double nm = std::sin(2.0 * qv) - 2.0 * q0b - 2.0 * q1b;
        // jac/(b^2 (1-b^2)) with the (1-b) factors cancelled analytically
        const double n1 = static_cast<double>(mesh.a.size()) - 1.0;
        const double xi = j / n1;
        const double w = p * s_span * std::pow(1.0 - xi, p - 1.0) / (b * b * (1.0 + b));
        return nm * w;
    };

    auto out = picard_run(pb, cfg);
    SegmentSolution s;
    s.kind = SegmentKind::subcone;
    s.region = bs::Region::interior;
    s.a_lo = 0.5;
    s.a_hi = pb.mesh.a.back();
    s.nodes = pb.mesh.a;
    s.q = std::move(out.q);
    s.qp = std::move(out.qp);
    s.corr = std::move(out.psi);
    s.corrp = std::move(out.psip);
    s.params.d1 = d1;
    s.params.d2 = d2;
    s.params.d3 = d3;
    s.convergence = out.conv;
    s.convergence.interp_error_bound =
        cubic_interp_bound(s.nodes, s.corr.empty() ? s.q : s.corr);
    return s;
}

SegmentSolution solve_supercone_with_c(double d1t, double d2t, const PicardConfig& cfg,
                                       double c_large, KernelOrientation ko) {
    cfg.validate();
    check_small(d2t, cfg.smallness_bound, "d2t");
    const bool large = std::abs(d1t) >= 1.0;
    if (!large) check_small(d1t, cfg.smallness_bound, "d1t");
    const double d3t = arcsine_slave(d2t, "solve_supercone");
    const double a_hi = large ? 1.0 + c_large / std::sqrt(std::abs(d1t)) : 2.0;

    PicardProblem pb;
    // in large mode the forcing oscillates with phase rate ~ 4|d1t|(b-1);
    // keep the phase change per node small
    const int n_mesh =
        large ? std::clamp(static_cast<int>(800.0 * c_large * std::sqrt(std::abs(d1t))),
                           cfg.mesh_points, 60000)
              : cfg.mesh_points;
    pb.mesh = mesh_toward_cone_above(cfg.endpoint_offset, a_hi, n_mesh,
                                     cfg.grading_exponent);
    pb.exterior = true;
    pb.anchor = 0;
    pb.sign = sign_of(ko);
    pb.lin = [d1t, d2t, d3t](double a) {
        return d1t * bs::phi1_ext(a) + d2t * bs::phi2_ext(a) - (d3t - d2t) * 2.0 / a;
    };
    pb.lin_prime = [d1t, d2t, d3t](double a) {
        return d1t * bs::phi1_ext_prime(a) + d2t * bs::phi2_ext_prime(a) +
               (d3t - d2t) * 2.0 / (a * a);
    };
    const auto& mesh = pb.mesh;
    const double p = cfg.grading_exponent;
    const double lambda = std::log((a_hi - 1.0) / cfg.endpoint_offset);
    auto lin = pb.lin;
    pb.numerator = [&mesh, d1t, d2t, lin, p, lambda](int j, double qv) {
        const double b = mesh.a[j];
        const double q0b = d1t * bs::phi1_ext(b) + d2t * bs::phi2_ext(b);
        const double q1b = qv - lin(b);
        const double nm = std::sin(2.0 * qv) - 2.0 * q0b - 2.0 * q1b;
        const double n1 = static_cast<double>(mesh.a.size()) - 1.0;
        const double xi = j / n1;
        // jac/(b^2 (1-b^2)) = -(lambda p xi^{p-1})/(b^2 (1+b))
        const double w = -lambda * p * (p == 1.0 ? 1.0 : std::pow(xi, p - 1.0)) /
                         (b * b * (1.0 + b));
        return nm * w;
    };

    auto out = picard_run(pb, cfg);

    if (large) {
        // a-posteriori bound |Q1~| <= C_boot |d1t| (a-1)^2 log^2(a-1)
        double worst = 0.0;
        for (std::size_t j = 0; j < mesh.a.size(); ++j) {
            const double am1 = mesh.a[j] - 1.0;
            const double lg = std::log(am1);
            worst = std::max(worst, std::abs(out.psi[j]) / (am1 * am1 * lg * lg));
        }
        const double measured = worst / std::abs(d1t);
        if (measured > kBootstrapC)
            throw BootstrapViolationError(
                "large-mode bound violated: sup |Q1~|/((a-1)^2 log^2(a-1) d1t) = " +
                    std::to_string(measured),
                measured);
    }

    SegmentSolution s;
    s.kind = SegmentKind::supercone;
    s.region = bs::Region::exterior;
    s.a_lo = pb.mesh.a.front();
    s.a_hi = a_hi;
    s.nodes = pb.mesh.a;
    s.q = std::move(out.q);
    s.qp = std::move(out.qp);
    s.corr = std::move(out.psi);
    s.corrp = std::move(out.psip);
    s.params.d1t = d1t;
    s.params.d2t = d2t;
    s.params.d3t = d3t;
    s.params.mode = large ? ProfileMode::large : ProfileMode::small;
    s.convergence = out.conv;
    s.convergence.interp_error_bound =
        cubic_interp_bound(s.nodes, s.corr.empty() ? s.q : s.corr);
    return s;
}

SegmentSolution solve_supercone(double d1t, double d2t, const PicardConfig& cfg,
                                KernelOrientation ko) {
    return solve_supercone_with_c(d1t, d2t, cfg, kLargeModeC, ko);
}

SegmentSolution solve_farfield(double q1, double q2, const PicardConfig& cfg) {
    cfg.validate();
    check_small(q1, cfg.smallness_bound, "q1");
    check_small(q2, cfg.smallness_bound, "q2");
    const double A = cfg.farfield_cutoff;

    PicardProblem pb;
    pb.mesh = mesh_log(2.0, A, cfg.mesh_points);
    pb.exterior = true;
    pb.anchor = cfg.mesh_points - 1;
    pb.sign = 1.0;  // both orientations coincide here
    pb.lin = [q1, q2](double a) { return q1 * bs::phi1_ext(a) + q2 * bs::phi2_ext(a); };
    pb.lin_prime = [q1, q2](double a) {
        return q1 * bs::phi1_ext_prime(a) + q2 * bs::phi2_ext_prime(a);
    };
    const auto& mesh = pb.mesh;
    pb.numerator = [&mesh](int j, double qv) {
        const double b = mesh.a[j];
        return bs::sin2q_minus_2q(qv) / (b * b * (1.0 - b * b)) * mesh.jac[j];
    };
    // Tail b in (A, inf): substitute u = 1/b and replace Q by its linear
    // asymptote q1 phi1~ + q2 phi2~. Then
    //   J1 = int_A^inf phi1~(b) b^2/4 N db = -(1/4) int_0^{1/A} S(Q) du
    //   J2 = int_A^inf phi2~(b) b^2/4 N db = -(1/4) int_0^{1/A} phi2~(1/u) S(Q)/(1-u^2) du
    // and the correction from a is int_inf^a = -(tail + [a, A] part).
    const auto rule = num::gauss_legendre(24, 0.0, 1.0 / A);
    pb.tail = [q1, q2, &rule](std::span<const double>) {
        long double j1 = 0.0L, j2 = 0.0L;
        for (std::size_t g = 0; g < rule.x.size(); ++g) {
            const double u = rule.x[g];
            const double p1 = 1.0 - u * u;
            const double p2 = u == 0.0 ? 0.0 : bs::phi2_ext(1.0 / u);
            const double Sq = bs::sin2q_minus_2q(q1 * p1 + q2 * p2);
            j1 += rule.w[g] * (-0.25) * Sq;
            j2 += rule.w[g] * (-0.25) * p2 * Sq / (1.0 - u * u);
        }
        return std::pair<double, double>{static_cast<double>(j1), static_cast<double>(j2)};
    };

    auto out = picard_run(pb, cfg);

    double qmax = 0.0;
    for (double v : out.q) qmax = std::max(qmax, std::abs(v));
    // bound on the nonlinearity neglected in the tail: |S(Q)-S(Q_lin)| <=
    // 4 Qmax^2 * 2 Qmax^3 / A^2 integrated against the kernel
    const double tail_bound = 4.0 * std::pow(qmax, 5) / (A * A * A);
    if (tail_bound > cfg.tol)
        throw TruncationDominatedError(
            "far-field tail bound " + std::to_string(tail_bound) + " exceeds tol", tail_bound);

    SegmentSolution s;
    s.kind = SegmentKind::farfield;
    s.region = bs::Region::exterior;
    s.a_lo = 2.0;
    s.a_hi = A;
    s.nodes = pb.mesh.a;
    s.q = std::move(out.q);
    s.qp = std::move(out.qp);
    s.corr = std::move(out.psi);
    s.corrp = std::move(out.psip);
    s.params.q1 = q1;
    s.params.q2 = q2;
    s.convergence = out.conv;
    s.convergence.interp_error_bound =
        cubic_interp_bound(s.nodes, s.corr.empty() ? s.q : s.corr);
    return s;
}

double ode_second_derivative(double a, double q, double qp) {
    return (std::sin(2.0 * q) / (a * a) - (2.0 / a - 2.0 * a) * qp) / (1.0 - a * a);
}

SegmentSolution extend_outward(const SegmentSolution& src, double a_hi, int n_nodes) {
    if (src.region != bs::Region::exterior)
        throw std::invalid_argument("extend_outward: source must be an exterior segment");
    const double a0 = src.a_hi;
    if (!(a_hi > a0)) throw std::invalid_argument("extend_outward: a_hi must exceed the source end");

    // the outward solution oscillates with local wavelength ~ pi/|Q'|;
    // size the output mesh to keep it resolved
    const int n_eff = std::clamp(static_cast<int>(72.0 * std::abs(src.qp.back()) * a0), n_nodes,
                                 300000);
    n_nodes = n_eff;
    SegmentSolution s;
    s.kind = SegmentKind::extension;
    s.region = bs::Region::exterior;
    s.a_lo = a0;
    s.a_hi = a_hi;
    s.params = src.params;
    s.nodes.resize(n_nodes);
    s.q.resize(n_nodes);
    s.qp.resize(n_nodes);
    const double lambda = std::log(a_hi / a0);
    for (int j = 0; j < n_nodes; ++j)
        s.nodes[j] = a0 * std::exp(lambda * j / (n_nodes - 1));
    s.nodes.back() = a_hi;

    // Dormand-Prince 5(4), error-controlled, stepped exactly onto the nodes.
    auto rhs = [](double a, double y0, double y1, double& f0, double& f1) {
        f0 = y1;
        f1 = ode_second_derivative(a, y0, y1);
    };
    double a = a0, y0 = src.q.back(), y1 = src.qp.back();
    s.q[0] = y0;
    s.qp[0] = y1;
    double h = 1e-6 * a0;
    const double atol = 1e-12, rtol = 1e-12;
    for (int j = 1; j < n_nodes; ++j) {
        const double target = s.nodes[j];
        while (a < target) {
            h = std::min(h, target - a);
            static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
            double k[7][2];
            rhs(a, y0, y1, k[0][0], k[0][1]);
            rhs(a + c2 * h, y0 + h * (0.2 * k[0][0]), y1 + h * (0.2 * k[0][1]), k[1][0], k[1][1]);
            rhs(a + c3 * h, y0 + h * (3.0 / 40 * k[0][0] + 9.0 / 40 * k[1][0]),
                y1 + h * (3.0 / 40 * k[0][1] + 9.0 / 40 * k[1][1]), k[2][0], k[2][1]);
            rhs(a + c4 * h,
                y0 + h * (44.0 / 45 * k[0][0] - 56.0 / 15 * k[1][0] + 32.0 / 9 * k[2][0]),
                y1 + h * (44.0 / 45 * k[0][1] - 56.0 / 15 * k[1][1] + 32.0 / 9 * k[2][1]),
                k[3][0], k[3][1]);
            rhs(a + c5 * h,
                y0 + h * (19372.0 / 6561 * k[0][0] - 25360.0 / 2187 * k[1][0] +
                          64448.0 / 6561 * k[2][0] - 212.0 / 729 * k[3][0]),
                y1 + h * (19372.0 / 6561 * k[0][1] - 25360.0 / 2187 * k[1][1] +
                          64448.0 / 6561 * k[2][1] - 212.0 / 729 * k[3][1]),
                k[4][0], k[4][1]);
            rhs(a + h,
                y0 + h * (9017.0 / 3168 * k[0][0] - 355.0 / 33 * k[1][0] +
                          46732.0 / 5247 * k[2][0] + 49.0 / 176 * k[3][0] -
                          5103.0 / 18656 * k[4][0]),
                y1 + h * (9017.0 / 3168 * k[0][1] - 355.0 / 33 * k[1][1] +
                          46732.0 / 5247 * k[2][1] + 49.0 / 176 * k[3][1] -
                          5103.0 / 18656 * k[4][1]),
                k[5][0], k[5][1]);
            double y0n = y0 + h * (35.0 / 384 * k[0][0] + 500.0 / 1113 * k[2][0] +
                                   125.0 / 192 * k[3][0] - 2187.0 / 6784 * k[4][0] +
                                   11.0 / 84 * k[5][0]);
            double y1n = y1 + h * (35.0 / 384 * k[0][1] + 500.0 / 1113 * k[2][1] +
                                   125.0 / 192 * k[3][1] - 2187.0 / 6784 * k[4][1] +
                                   11.0 / 84 * k[5][1]);
            rhs(a + h, y0n, y1n, k[6][0], k[6][1]);
            double e0 = h * (71.0 / 57600 * k[0][0] - 71.0 / 16695 * k[2][0] +
                             71.0 / 1920 * k[3][0] - 17253.0 / 339200 * k[4][0] +
                             22.0 / 525 * k[5][0] - 1.0 / 40 * k[6][0]);
            double e1 = h * (71.0 / 57600 * k[0][1] - 71.0 / 16695 * k[2][1] +
                             71.0 / 1920 * k[3][1] - 17253.0 / 339200 * k[4][1] +
                             22.0 / 525 * k[5][1] - 1.0 / 40 * k[6][1]);
            const double sc0 = atol + rtol * std::max(std::abs(y0), std::abs(y0n));
            const double sc1 = atol + rtol * std::max(std::abs(y1), std::abs(y1n));
            const double err = std::sqrt(0.5 * ((e0 / sc0) * (e0 / sc0) + (e1 / sc1) * (e1 / sc1)));
            if (err <= 1.0) {
                a += h;
                y0 = y0n;
                y1 = y1n;
            }
            const double fac = std::clamp(0.9 * std::pow(err > 0 ? err : 1e-10, -0.2), 0.2, 5.0);
            h *= fac;
            if (h < 1e-15 * a) throw SolverError("extend_outward: step size underflow");
        }
        s.q[j] = y0;
        s.qp[j] = y1;
    }
    s.convergence.interp_error_bound =
        cubic_interp_bound(s.nodes, s.corr.empty() ? s.q : s.corr);
    return s;
}

// The combinations of phi1, phi2 annihilate the linearised operator and 1/a
// annihilates psi'' + (2/a) psi', so with the stored correction the full
// residual reduces to [2 P - sin(2Q)]/a^2 plus derivatives of the correction
// only. Differencing the correction instead of Q keeps the evaluation
// conditioned on the graded mesh, where neighbouring Q values agree to near
// machine precision.
std::vector<std::pair<double, double>> ode_residual(const SegmentSolution& seg,
                                                    double endpoint_offset) {
    const auto& x = seg.nodes;
    const int n = static_cast<int>(x.size());
    std::vector<std::pair<double, double>> out;
    if (n < 7) return out;
    std::vector<double> corr = seg.corr;
    if (corr.empty()) {
        corr.resize(n);
        for (int i = 0; i < n; ++i) corr[i] = seg.q[i] - seg.lin_value(x[i]);
    }
    const double guard = 10.0 * endpoint_offset;
    // centered seven-point stencils; the boundary nodes have none
    for (int i = 3; i + 3 < n; ++i) {
        const double a = x[i];
        if (a <= guard) continue;                 // origin
        if (std::abs(a - 1.0) <= guard) continue; // light cone
        const int lo = i - 3;
        std::array<double, 7> window;
        for (int k = 0; k < 7; ++k) window[k] = x[lo + k];
        auto w = num::fd_weights(a, std::span<const double>(window.data(), 7), 2);
        double d1 = 0, d2 = 0;
        for (int k = 0; k < 7; ++k) {
            d1 += w[1][k] * corr[lo + k];
            d2 += w[2][k] * corr[lo + k];
        }
        const double res = (2.0 * seg.lin_phi_part(a) - std::sin(2.0 * seg.q[i])) / (a * a) +
                           (1.0 - a * a) * d2 + (2.0 / a - 2.0 * a) * d1;
        out.emplace_back(a, std::abs(res));
    }
    return out;
}

double calibrate_large_mode_c(const PicardConfig& cfg, std::span<const double> d1ts,
                              double c_max) {
    double c = c_max;
    for (int step = 0; step <= 10; ++step, c *= 0.5) {
        bool ok = true;
        for (double d1t : d1ts) {
            try {
                (void)solve_supercone_with_c(d1t, 0.01, cfg, c);
            } catch (const SolverError&) {
                ok = false;
                break;
            }
        }
        if (ok) return c;
    }
    throw SolverError("calibrate_large_mode_c: no c in the ladder passed");
}

}  // namespace wavemap::seg
