#include "wavemap/evolve.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "wavemap/numerics.hpp"

namespace wavemap::evolve {

void RadialGrid::validate() const {
    if (n < 16) throw std::invalid_argument("RadialGrid: n must be >= 16");
    if (!(r_max > 0.0)) throw std::invalid_argument("RadialGrid: r_max must be positive");
}

namespace {

// spatial operator u_rr + (2/r) u_r - sin(2u)/r^2 on the interior nodes
void accel_plain(const RadialGrid& g, const std::vector<double>& u, bool nonlinear,
                 std::vector<double>& out) {
    const int n = g.n;
    const double h = g.h();
    out.assign(n + 1, 0.0);
    for (int i = 1; i < n; ++i) {
        const double r = i * h;
        const double urr = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
        const double ur = (u[i + 1] - u[i - 1]) / (2.0 * h);
        double a = urr + 2.0 / r * ur;
        if (nonlinear) a -= std::sin(2.0 * u[i]) / (r * r);
        out[i] = a;
    }
}

bool finite_all(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

WaveState step(const WaveState& s, double dt, const RadialGrid& g, const StepOptions& opt) {
    g.validate();
    if (!(dt > 0.0) || dt > opt.cfl_max * g.h())
        throw std::invalid_argument("step: dt violates the CFL bound cfl_max*h");
    const int n = g.n;
    WaveState out;
    out.t = s.t + dt;
    out.u.resize(n + 1);
    out.ut.resize(n + 1);

    std::vector<double> a0, a1;
    accel_plain(g, s.u, opt.nonlinear, a0);
    for (int i = 1; i < n; ++i) out.u[i] = s.u[i] + dt * s.ut[i] + 0.5 * dt * dt * a0[i];
    out.u[0] = 0.0;
    if (opt.boundary) {
        auto [bv, bt] = opt.boundary(out.t);
        out.u[n] = bv;
        out.ut[n] = bt;
    } else {
        out.u[n] = s.u[n];
        out.ut[n] = 0.0;
    }
    accel_plain(g, out.u, opt.nonlinear, a1);
    for (int i = 1; i < n; ++i) out.ut[i] = s.ut[i] + 0.5 * dt * (a0[i] + a1[i]);
    out.ut[0] = 0.0;
    out.blowup = s.blowup || !finite_all(out.u) || !finite_all(out.ut);
    return out;
}

double energy(const WaveState& s, const RadialGrid& g) {
    const int n = g.n;
    const double h = g.h();
    long double acc = 0.0L;
    for (int i = 0; i <= n; ++i) {
        const double r = i * h;
        double ur;
        if (i == 0)
            ur = (-3.0 * s.u[0] + 4.0 * s.u[1] - s.u[2]) / (2.0 * h);
        else if (i == n)
            ur = (3.0 * s.u[n] - 4.0 * s.u[n - 1] + s.u[n - 2]) / (2.0 * h);
        else
            ur = (s.u[i + 1] - s.u[i - 1]) / (2.0 * h);
        const double si = std::sin(s.u[i]);
        const double integrand = (s.ut[i] * s.ut[i] + ur * ur) * r * r + 2.0 * si * si;
        acc += (i == 0 || i == n ? 0.5L : 1.0L) * (long double)integrand;
    }
    return static_cast<double>(acc) * h;
}

PerturbationNorms perturbation_norms(const RadialGrid& g, const std::vector<double>& eps,
                                     const std::vector<double>& eps_t) {
    const int n = g.n;
    const double h = g.h();
    PerturbationNorms out;
    long double e_acc = 0.0L, l2_acc = 0.0L, l5_acc = 0.0L;
    for (int i = 0; i <= n; ++i) {
        const double r = i * h;
        out.sup = std::max(out.sup, std::abs(eps[i]));
        double er;
        if (i == 0)
            er = (-3.0 * eps[0] + 4.0 * eps[1] - eps[2]) / (2.0 * h);
        else if (i == n)
            er = (3.0 * eps[n] - 4.0 * eps[n - 1] + eps[n - 2]) / (2.0 * h);
        else
            er = (eps[i + 1] - eps[i - 1]) / (2.0 * h);
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        e_acc += w * (long double)((eps_t[i] * eps_t[i] + er * er) * r * r);
        l2_acc += w * (long double)(eps[i] * eps[i] * r * r);
        // v = eps/r with the r^4 weight; at the axis v -> eps'(0)
        const double v = i == 0 ? er : eps[i] / r;
        l5_acc += w * (long double)(v * v * r * r * r * r);
    }
    out.energy = std::sqrt(static_cast<double>(e_acc) * h);
    out.l2 = std::sqrt(static_cast<double>(l2_acc) * h);
    out.l2_5d = std::sqrt(static_cast<double>(l5_acc) * h);
    return out;
}

PersistenceReport run_persistence(const GlobalProfile& prof, const CutoffSpec& cutoff, double T,
                                  double delta1, double horizon_factor, const RadialGrid& grid,
                                  const PersistenceConfig& pc) {
    grid.validate();
    if (!(T > 0.0) || !(horizon_factor > 1.0))
        throw std::invalid_argument("run_persistence: need T > 0 and horizon_factor > 1");
    // the forward cone of the cutoff strip and of the data annulus must stay
    // inside the grid over the whole run
    if (grid.r_max < horizon_factor * T + 2.0 * cutoff.width)
        throw std::invalid_argument(
            "run_persistence: r_max too small for the horizon (forward cone exits the grid)");
    auto shared = std::make_shared<const GlobalProfile>(prof);
    const ApproxSolutionField field(shared, cutoff);

    PersistenceReport rep;
    rep.T = T;
    rep.delta1 = delta1;
    const double t_end = horizon_factor * T;
    const int n = grid.n;
    const double h = grid.h();
    const double dt = pc.cfl * h;
    const long n_steps = static_cast<long>(std::ceil((t_end - T) / dt));

    if (delta1 > 0.0) {
        const double resid = approx::residual_norms(field, T).l2;
        if (resid > pc.residual_fraction * delta1)
            throw std::invalid_argument(
                "run_persistence: profile residual at T (" + std::to_string(resid) +
                ") dominates delta1; increase T or delta1");
    }

    // smooth even bump pair in [T-width, T+width], scaled to delta1
    std::vector<double> eps(n + 1, 0.0), eps_t(n + 1, 0.0);
    if (delta1 > 0.0) {
        const double C = cutoff.width;
        for (int i = 0; i <= n; ++i) {
            const double y = (i * h - T) / C;
            if (std::abs(y) < 1.0) {
                const double b = std::pow(1.0 - y * y, 4);
                eps[i] = b;
                eps_t[i] = b / C;
            }
        }
        const double e0n = perturbation_norms(grid, eps, eps_t).energy;
        const double scale = delta1 / e0n;
        for (int i = 0; i <= n; ++i) {
            eps[i] *= scale;
            eps_t[i] *= scale;
        }
    }

    // acceleration of eps given the analytic background:
    //   eps_tt = eps_rr + (2/r) eps_r - 2 cos(2 ua + eps) sin(eps)/r^2 - e0(t,r)
    std::vector<double> ua(n + 1), acc0(n + 1, 0.0), acc1(n + 1, 0.0);
    auto fill_accel = [&](double t, const std::vector<double>& e, std::vector<double>& out) {
        for (int i = 1; i < n; ++i) {
            const double r = i * h;
            const double err = (e[i + 1] - 2.0 * e[i] + e[i - 1]) / (h * h);
            const double er = (e[i + 1] - e[i - 1]) / (2.0 * h);
            const double uai = field.u(t, r);
            const double coupling = 2.0 * std::cos(2.0 * uai + e[i]) * std::sin(e[i]) / (r * r);
            out[i] = err + 2.0 / r * er - coupling - field.e0(t, r);
        }
        out[0] = out[n] = 0.0;
    };

    const int record_every = std::max(1L, n_steps / std::max(1, pc.record_target));
    auto record = [&](double t) {
        const auto pn = perturbation_norms(grid, eps, eps_t);
        rep.times.push_back(t);
        rep.sup_eps.push_back(pn.sup);
        rep.energy_eps.push_back(pn.energy);
        WaveState full;
        full.t = t;
        full.u.resize(n + 1);
        full.ut.resize(n + 1);
        full.u[0] = 0.0;
        full.ut[0] = 0.0;
        for (int i = 1; i <= n; ++i) {
            auto [uv, uvt] = field.u_and_ut(t, i * h);
            full.u[i] = uv + eps[i];
            full.ut[i] = uvt + eps_t[i];
        }
        rep.energy_total.push_back(energy(full, grid));
    };

    double t = T;
    record(t);
    fill_accel(t, eps, acc0);
    for (long s = 0; s < n_steps; ++s) {
        const double step_dt = std::min(dt, t_end - t);
        for (int i = 1; i < n; ++i)
            eps[i] += step_dt * eps_t[i] + 0.5 * step_dt * step_dt * acc0[i];
        const double t_new = t + step_dt;
        fill_accel(t_new, eps, acc1);
        for (int i = 1; i < n; ++i) eps_t[i] += 0.5 * step_dt * (acc0[i] + acc1[i]);
        acc0.swap(acc1);
        t = t_new;

        double sup_full = 0.0;
        bool finite = true;
        for (int i = 0; i <= n; ++i) {
            if (!std::isfinite(eps[i]) || !std::isfinite(eps_t[i])) {
                finite = false;
                break;
            }
            sup_full = std::max(sup_full, std::abs(eps[i]));
        }
        if (!finite || sup_full > pc.blowup_sup) {
            rep.blowup = true;
            rep.blowup_time = t;
            record(t);
            break;
        }
        if ((s + 1) % record_every == 0 || s + 1 == n_steps) record(t);
    }
    rep.horizon = t;

    // growth exponent of the perturbation energy on the second half
    std::vector<double> lx, ly;
    const double t_half = T + 0.5 * (rep.horizon - T);
    for (std::size_t i = 0; i < rep.times.size(); ++i) {
        if (rep.times[i] >= t_half && rep.energy_eps[i] > 1e-300) {
            lx.push_back(std::log(rep.times[i] / T));
            ly.push_back(std::log(rep.energy_eps[i]));
        }
    }
    if (lx.size() >= 4) {
        const auto f = num::line_fit(lx, ly);
        rep.gamma_fit = f.slope;
        rep.gamma_r2 = f.r2;
    }
    rep.persistent = !rep.blowup && rep.gamma_fit <= pc.gamma_max;
    return rep;
}

}  // namespace wavemap::evolve
