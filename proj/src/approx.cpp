#include "wavemap/approx.hpp"

#include <cmath>
#include <stdexcept>

#include "wavemap/numerics.hpp"

namespace wavemap::approx {

namespace bs = wavemap::basis;

void CutoffSpec::validate() const {
    if (!(width > 0.0)) throw std::invalid_argument("CutoffSpec: width must be positive");
}

double CutoffSpec::chi(double x) const {
    return num::smoothstep7((std::abs(x) - width) / width);
}

double CutoffSpec::chi_prime(double x) const {
    const double s = x < 0 ? -1.0 : 1.0;
    return s * num::smoothstep7_d1((std::abs(x) - width) / width) / width;
}

double CutoffSpec::chi_second(double x) const {
    return num::smoothstep7_d2((std::abs(x) - width) / width) / (width * width);
}

ApproxSolutionField::ApproxSolutionField(std::shared_ptr<const GlobalProfile> profile,
                                         CutoffSpec cutoff)
    : profile_(std::move(profile)), cutoff_(cutoff) {
    cutoff_.validate();
    c3_ = profile_->params.d3;
}

double ApproxSolutionField::u(double t, double r) const {
    if (!(t > 0.0) || !(r > 0.0))
        throw std::domain_error("ApproxSolutionField::u: t and r must be positive");
    const double x = t - r, a = r / t;
    const double chi = cutoff_.chi(x);
    const double core = c3_ * 2.0 / a;
    if (chi == 0.0) return core;
    return chi * profile_->q0(a).first + (1.0 - chi) * core;
}

std::pair<double, double> ApproxSolutionField::u_and_ut(double t, double r) const {
    if (!(t > 0.0) || !(r > 0.0))
        throw std::domain_error("ApproxSolutionField::u_and_ut: t and r must be positive");
    const double x = t - r, a = r / t;
    const double chi = cutoff_.chi(x), dchi = cutoff_.chi_prime(x);
    const double q3 = 2.0 / a;
    if (chi == 0.0 && dchi == 0.0) {
        return {c3_ * q3, c3_ * 2.0 / (a * t)};
    }
    const auto [q0v, q0p] = profile_->q0(a);
    const double val = chi * q0v + (1.0 - chi) * c3_ * q3;
    const double ut = dchi * (q0v - c3_ * q3) - (a / t) * (chi * q0p) +
                      (1.0 - chi) * 2.0 * c3_ / (a * t);
    return {val, ut};
}

double ApproxSolutionField::u_without_q4(double t, double r) const {
    const double x = t - r, a = r / t;
    const double chi = cutoff_.chi(x);
    const double core = c3_ * 2.0 / a;
    if (chi == 0.0) return core;
    const auto& p = profile_->params;
    const double c1 = a < 1.0 ? p.d1 : p.d1t;
    const double c2 = a < 1.0 ? p.d2 : p.d2t;
    const double rr = c1 * match::cone_basis_b1(a) +
                      (a < 1.0 ? -c2 : c2) * match::cone_basis_b2(a);
    return chi * rr + core;
}

double ApproxSolutionField::e0(double t, double r) const {
    const double x = t - r, a = r / t;
    const double C = cutoff_.width;
    if (std::abs(x) >= 2.0 * C) return 0.0;  // u = Q0 there, an exact solution
    const double q3 = 2.0 / a;
    if (std::abs(x) <= C) {
        // u = C3 Q3, which is annihilated by the wave operator
        return std::sin(2.0 * c3_ * q3) / (r * r);
    }
    const double chi = cutoff_.chi(x), dchi = cutoff_.chi_prime(x);
    const auto [q0v, q0p] = profile_->q0(a);
    const double w = q0v - c3_ * q3;
    const double wp = q0p + 2.0 * c3_ / (a * a);
    const double transport = 2.0 * dchi * (wp * (1.0 - a) + w / a) / t;
    const double uval = chi * q0v + (1.0 - chi) * c3_ * q3;
    const double nl = (std::sin(2.0 * uval) - chi * std::sin(2.0 * q0v)) / (r * r);
    return transport + nl;
}

namespace {

// 6th-order central first/second derivative, 7 points.
template <typename F>
void fd_r(const F& f, double h, double& d1, double& d2) {
    const double m3 = f(-3), m2 = f(-2), m1 = f(-1), z = f(0), p1 = f(1), p2 = f(2), p3 = f(3);
    d1 = (-m3 / 60 + 3 * m2 / 20 - 3 * m1 / 4 + 3 * p1 / 4 - 3 * p2 / 20 + p3 / 60) / h;
    d2 = (m3 / 90 - 3 * m2 / 20 + 3 * m1 / 2 - 49 * z / 18 + 3 * p1 / 2 - 3 * p2 / 20 + p3 / 90) /
         (h * h);
}

// 4th-order central second derivative, 5 points.
template <typename F>
double fd_tt(const F& f, double h) {
    return (-f(-2) / 12 + 4 * f(-1) / 3 - 5 * f(0) / 2 + 4 * f(1) / 3 - f(2) / 12) / (h * h);
}

}  // namespace

double ApproxSolutionField::e0_fd(double t, double r, double h_r, double h_t) const {
    const double cap = cutoff_.width / 20.0;
    if (h_r > cap || h_t > cap)
        throw std::invalid_argument("e0_fd: step exceeds width/20");
    double ur, urr;
    fd_r([&](int k) { return u(t, r + k * h_r); }, h_r, ur, urr);
    const double utt = fd_tt([&](int k) { return u(t + k * h_t, r); }, h_t);
    return utt - urr - 2.0 / r * ur + std::sin(2.0 * u(t, r)) / (r * r);
}

double ApproxSolutionField::e0_fd(double t, double r) const {
    const double h = cutoff_.width / 20.0;
    return e0_fd(t, r, h, h);
}

double ApproxSolutionField::e0_fd_without_q4(double t, double r, double h_r, double h_t) const {
    const double cap = cutoff_.width / 20.0;
    if (h_r > cap || h_t > cap)
        throw std::invalid_argument("e0_fd_without_q4: step exceeds width/20");
    double ur, urr;
    fd_r([&](int k) { return u_without_q4(t, r + k * h_r); }, h_r, ur, urr);
    const double utt = fd_tt([&](int k) { return u_without_q4(t + k * h_t, r); }, h_t);
    return utt - urr - 2.0 / r * ur + std::sin(2.0 * u_without_q4(t, r)) / (r * r);
}

ResidualNorms residual_norms(const ApproxSolutionField& f, double t, bool use_fd) {
    const double C = f.cutoff().width;
    ResidualNorms out;
    // well under the width/20 cap; the defect is ~t^-3 and the stencil
    // truncation must stay below it over the scanned range
    const double h_fd = C / 80.0;

    auto eval = [&](double r) { return use_fd ? f.e0_fd(t, r, h_fd, h_fd) : f.e0(t, r); };

    // l2 over the support |t-r| <= 2C (Simpson)
    const int n = 1600;  // even
    const double lo = t - 2.0 * C, hi = t + 2.0 * C;
    const double h = (hi - lo) / n;
    long double acc = 0.0L;
    for (int i = 0; i <= n; ++i) {
        const double r = lo + i * h;
        const double e = eval(r);
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * (long double)(e * e * r * r);
    }
    out.l2 = std::sqrt(4.0 * M_PI * static_cast<double>(acc) * h / 3.0);

    // sup over the strip C <= |t-r| <= 2C; the FD path skips 5h around the
    // joints where the stencil order degrades
    const int m = 400;
    for (int side = 0; side < 2; ++side) {
        for (int i = 0; i <= m; ++i) {
            const double ax = C + (C * i) / m;
            if (use_fd && (std::abs(ax - C) < 5 * h_fd || std::abs(ax - 2 * C) < 5 * h_fd))
                continue;
            const double r = side == 0 ? t - ax : t + ax;
            out.strip_sup = std::max(out.strip_sup, std::abs(eval(r)));
        }
    }
    return out;
}

double radial_sine_transform(std::span<const double> r, std::span<const double> u, double k) {
    if (r.size() != u.size() || r.size() < 2)
        throw std::invalid_argument("radial_sine_transform: bad sample arrays");
    long double acc = 0.0L;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
        const double f0 = u[i] * std::sin(k * r[i]) * r[i];
        const double f1 = u[i + 1] * std::sin(k * r[i + 1]) * r[i + 1];
        acc += 0.5L * (long double)(f0 + f1) * (r[i + 1] - r[i]);
    }
    return 4.0 * M_PI / k * static_cast<double>(acc);
}

namespace {

void check_band_args(std::span<const double> r, std::span<const double> u, double k_min,
                     double k_max) {
    if (r.size() != u.size() || r.size() < 8)
        throw std::invalid_argument("critical_norm_band: bad sample arrays");
    if (!(k_min > 0.0) || !(k_max > k_min))
        throw std::invalid_argument("critical_norm_band: need 0 < k_min < k_max");
    double dmax = 0.0;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) dmax = std::max(dmax, r[i + 1] - r[i]);
    if (dmax * k_max > 0.5)
        throw std::invalid_argument("critical_norm_band: grid too coarse for k_max (aliasing)");
}

}  // namespace

double critical_norm_band(std::span<const double> r, std::span<const double> u, double k_min,
                          double k_max) {
    check_band_args(r, u, k_min, k_max);
    // trapezoid in log k of k^4 |u_hat|^2
    const int per_decade = 32;
    const int nk = std::max(8, static_cast<int>(std::ceil(std::log10(k_max / k_min) * per_decade)));
    long double acc = 0.0L;
    double prev_lk = std::log(k_min);
    double prev_g = 0.0;
    for (int i = 0; i <= nk; ++i) {
        const double lk = std::log(k_min) + (std::log(k_max) - std::log(k_min)) * i / nk;
        const double k = std::exp(lk);
        const double uh = radial_sine_transform(r, u, k);
        const double g = k * k * k * k * uh * uh;
        if (i > 0) acc += 0.5L * (long double)(g + prev_g) * (lk - prev_lk);
        prev_lk = lk;
        prev_g = g;
    }
    return static_cast<double>(acc) / std::pow(2.0 * M_PI, 3);
}

std::vector<double> critical_norm_band_series(std::span<const double> r,
                                              std::span<const double> u,
                                              std::span<const double> k_mins, double k_max) {
    if (k_mins.empty()) return {};
    for (std::size_t i = 0; i + 1 < k_mins.size(); ++i)
        if (!(k_mins[i] < k_mins[i + 1]))
            throw std::invalid_argument("critical_norm_band_series: k_mins must ascend");
    check_band_args(r, u, k_mins.front(), k_max);
    // master grid: the k_min values plus log-filler up to k_max
    const int per_decade = 32;
    std::vector<double> grid(k_mins.begin(), k_mins.end());
    const double top = grid.back();
    const int nfill =
        std::max(8, static_cast<int>(std::ceil(std::log10(k_max / top) * per_decade)));
    for (int i = 1; i <= nfill; ++i)
        grid.push_back(top * std::pow(k_max / top, static_cast<double>(i) / nfill));
    std::vector<double> g(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double k = grid[i];
        const double uh = radial_sine_transform(r, u, k);
        g[i] = k * k * k * k * uh * uh;
    }
    // suffix trapezoid in log k
    std::vector<double> suffix(grid.size(), 0.0);
    for (std::size_t i = grid.size() - 1; i-- > 0;) {
        const double dlk = std::log(grid[i + 1] / grid[i]);
        suffix[i] = suffix[i + 1] + 0.5 * (g[i] + g[i + 1]) * dlk;
    }
    std::vector<double> out(k_mins.size());
    for (std::size_t i = 0; i < k_mins.size(); ++i)
        out[i] = suffix[i] / std::pow(2.0 * M_PI, 3);
    return out;
}

BandGrowthScan band_growth_scan(const ApproxSolutionField& f, double T, int decades) {
    if (decades < 1) throw std::invalid_argument("band_growth_scan: decades must be >= 1");
    const double limit = f.profile().farfield.limit;
    const double coeff = f.profile().farfield.coeff;
    const double k_top = 1.0 / (4.0 * T);
    const double k_low = k_top * std::pow(10.0, -decades);
    const double k_max = 0.5;
    const double dr = 0.4 / k_max;
    const double r_grid = 30.0 / k_low;
    const std::size_t nsamp = static_cast<std::size_t>(r_grid / dr) + 1;
    std::vector<double> rs(nsamp), us(nsamp), uc(nsamp);
    const double r_on = T + 2.0 * f.cutoff().width;
    for (std::size_t i = 0; i < nsamp; ++i) {
        const double r = (i + 0.5) * dr;
        rs[i] = r;
        // decay window over the last third keeps cos(k r_grid) truncation
        // ringing out of the band integral
        const double win = 1.0 - num::smoothstep7((r - 0.65 * r_grid) / (0.3 * r_grid));
        const double base = f.u(T, r) - limit;
        us[i] = base * win;
        const double w = num::smoothstep7((r - r_on) / r_on);
        uc[i] = (base - w * coeff * T / r) * win;
    }
    BandGrowthScan out;
    const int per_decade = 8;
    const int nk = decades * per_decade;
    out.k_mins.resize(nk + 1);
    for (int i = 0; i <= nk; ++i)
        out.k_mins[i] = k_low * std::pow(10.0, static_cast<double>(i) / per_decade);
    out.n2 = critical_norm_band_series(rs, us, out.k_mins, k_max);
    out.n2_control = critical_norm_band_series(rs, uc, out.k_mins, k_max);
    std::vector<double> logs(nk + 1);
    for (int i = 0; i <= nk; ++i) logs[i] = std::log(1.0 / out.k_mins[i]);
    const auto fit = num::line_fit(logs, out.n2);
    const auto fit_c = num::line_fit(logs, out.n2_control);
    out.slope = fit.slope;
    out.r2 = fit.r2;
    double mean = 0;
    for (double v : out.n2) mean += v;
    mean /= out.n2.size();
    out.relative_slope = mean != 0 ? fit.slope / mean : 0.0;
    out.control_relative_slope = mean != 0 ? fit_c.slope / mean : 0.0;
    return out;
}

DecayFit decay_fit(std::span<const double> ts, std::span<const double> vals) {
    if (ts.size() != vals.size() || ts.size() < 4)
        throw std::invalid_argument("decay_fit: need >= 4 samples");
    std::vector<double> lx(ts.size()), ly(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (!(ts[i] > 0.0) || !(vals[i] > 0.0))
            throw std::invalid_argument("decay_fit: samples must be positive");
        lx[i] = std::log(ts[i]);
        ly[i] = std::log(vals[i]);
    }
    const auto f = num::line_fit(lx, ly);
    return {f.slope, f.r2};
}

}  // namespace wavemap::approx
