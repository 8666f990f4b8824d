#include "wavemap/numerics.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "wavemap/errors.hpp"

namespace wavemap::num {

std::vector<std::vector<double>> fd_weights(double c, std::span<const double> x, int m) {
    const int n = static_cast<int>(x.size());
    std::vector<std::vector<double>> w(m + 1, std::vector<double>(n, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - c;
    w[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - c;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    w[k][i] = c1 * (k * w[k - 1][i - 1] - c5 * w[k][i - 1]) / c2;
                w[0][i] = -c1 * c5 * w[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k)
                w[k][j] = (c4 * w[k][j] - k * w[k - 1][j]) / c3;
            w[0][j] = c4 * w[0][j] / c3;
        }
        c1 = c2;
    }
    return w;
}

std::vector<double> cumulative_uniform(std::span<const double> g, double h) {
    const std::size_t n = g.size();
    std::vector<double> out(n, 0.0);
    if (n < 2) return out;
    if (n < 4) {
        // trapezoid fallback for degenerate grids
        for (std::size_t j = 1; j < n; ++j)
            out[j] = out[j - 1] + 0.5 * h * (g[j - 1] + g[j]);
        return out;
    }
    long double acc = 0.0L;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        long double cell;
        if (j == 0) {
            cell = (9.0L * g[0] + 19.0L * g[1] - 5.0L * g[2] + g[3]) / 24.0L;
        } else if (j + 2 == n) {
            cell = (9.0L * g[n - 1] + 19.0L * g[n - 2] - 5.0L * g[n - 3] + g[n - 4]) / 24.0L;
        } else {
            cell = (-(long double)g[j - 1] + 13.0L * g[j] + 13.0L * g[j + 1] - g[j + 2]) / 24.0L;
        }
        acc += cell * h;
        out[j + 1] = static_cast<double>(acc);
    }
    return out;
}

std::vector<double> cumulative_uniform_suffix(std::span<const double> g, double h) {
    const std::size_t n = g.size();
    std::vector<double> rev(n);
    for (std::size_t j = 0; j < n; ++j) rev[j] = g[n - 1 - j];
    // integral over the reversed axis equals the forward one with the same
    // per-cell weights (the rule is symmetric in the four nodes)
    std::vector<double> c = cumulative_uniform(rev, h);
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = c[n - 1 - j];
    return out;
}

GaussRule gauss_legendre(int n, double a, double b) {
    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Newton iteration from the Chebyshev-like initial guess.
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        const double xm = 0.5 * (b + a);
        const double xl = 0.5 * (b - a);
        r.x[i] = xm - xl * z;
        r.x[n - 1 - i] = xm + xl * z;
        r.w[i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
        r.w[n - 1 - i] = r.w[i];
    }
    return r;
}

LineFit line_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("line_fit: need >= 2 samples of equal length");
    const double n = static_cast<double>(x.size());
    long double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += (long double)x[i] * x[i];
        sxy += (long double)x[i] * y[i];
        syy += (long double)y[i] * y[i];
    }
    const long double den = n * sxx - sx * sx;
    if (den == 0.0L) throw std::invalid_argument("line_fit: degenerate abscissae");
    LineFit f;
    f.slope = static_cast<double>((n * sxy - sx * sy) / den);
    f.intercept = static_cast<double>((sy - f.slope * sx) / n);
    long double ss_res = 0;
    const long double ybar = sy / n;
    long double ss_tot = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const long double e = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += e * e;
        ss_tot += ((long double)y[i] - ybar) * ((long double)y[i] - ybar);
    }
    f.r2 = ss_tot > 0 ? static_cast<double>(1.0L - ss_res / ss_tot) : 1.0;
    return f;
}

LsqResult lsq_small(const std::vector<double>& a, std::size_t nrows, std::size_t ncols,
                    std::span<const double> y) {
    if (a.size() != nrows * ncols || y.size() != nrows || ncols == 0 || nrows < ncols)
        throw std::invalid_argument("lsq_small: bad dimensions");
    // normal equations in long double
    std::vector<long double> m(ncols * ncols, 0.0L), rhs(ncols, 0.0L);
    for (std::size_t i = 0; i < nrows; ++i) {
        for (std::size_t p = 0; p < ncols; ++p) {
            rhs[p] += (long double)a[i * ncols + p] * y[i];
            for (std::size_t q = 0; q < ncols; ++q)
                m[p * ncols + q] += (long double)a[i * ncols + p] * a[i * ncols + q];
        }
    }
    // scale rows/cols by diagonal for the condition estimate
    long double dmax = 0, dmin = 1e300L;
    for (std::size_t p = 0; p < ncols; ++p) {
        dmax = std::max(dmax, m[p * ncols + p]);
        dmin = std::min(dmin, m[p * ncols + p]);
    }
    // Gaussian elimination with partial pivoting
    std::vector<std::size_t> piv(ncols);
    for (std::size_t p = 0; p < ncols; ++p) piv[p] = p;
    std::vector<long double> mm = m, rr = rhs;
    long double pivot_min = 1e300L, pivot_max = 0.0L;
    for (std::size_t k = 0; k < ncols; ++k) {
        std::size_t best = k;
        for (std::size_t i = k + 1; i < ncols; ++i)
            if (std::abs((double)mm[i * ncols + k]) > std::abs((double)mm[best * ncols + k])) best = i;
        if (best != k) {
            for (std::size_t q = 0; q < ncols; ++q) std::swap(mm[k * ncols + q], mm[best * ncols + q]);
            std::swap(rr[k], rr[best]);
        }
        const long double pk = mm[k * ncols + k];
        pivot_min = std::min(pivot_min, std::abs(pk));
        pivot_max = std::max(pivot_max, std::abs(pk));
        if (pk == 0.0L || std::abs((double)pk) < 1e-28 * (double)dmax)
            throw IllConditionedFitError("lsq_small: singular normal matrix");
        for (std::size_t i = k + 1; i < ncols; ++i) {
            const long double f = mm[i * ncols + k] / pk;
            for (std::size_t q = k; q < ncols; ++q) mm[i * ncols + q] -= f * mm[k * ncols + q];
            rr[i] -= f * rr[k];
        }
    }
    LsqResult res;
    res.coeff.assign(ncols, 0.0);
    for (std::size_t kk = ncols; kk-- > 0;) {
        long double s = rr[kk];
        for (std::size_t q = kk + 1; q < ncols; ++q) s -= mm[kk * ncols + q] * res.coeff[q];
        res.coeff[kk] = static_cast<double>(s / mm[kk * ncols + kk]);
    }
    res.cond = pivot_min > 0 ? static_cast<double>(pivot_max / pivot_min) : 1e300;
    return res;
}

double smoothstep7(double y) {
    if (y <= 0.0) return 0.0;
    if (y >= 1.0) return 1.0;
    return ((( -20.0 * y + 70.0) * y - 84.0) * y + 35.0) * y * y * y * y;
}

double smoothstep7_d1(double y) {
    if (y <= 0.0 || y >= 1.0) return 0.0;
    return (((-140.0 * y + 420.0) * y - 420.0) * y + 140.0) * y * y * y;
}

double smoothstep7_d2(double y) {
    if (y <= 0.0 || y >= 1.0) return 0.0;
    return (((-840.0 * y + 2100.0) * y - 1680.0) * y + 420.0) * y * y;
}

}  // namespace wavemap::num
