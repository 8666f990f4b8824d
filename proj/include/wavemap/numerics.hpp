#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wavemap::num {

// Finite-difference weights for the m-th derivative at point c from the
// nodes x (Fornberg's recursion). weights[k][j] is the weight of x[j] for
// the k-th derivative, k = 0..m.
std::vector<std::vector<double>> fd_weights(double c, std::span<const double> x, int m);

// Cumulative integral of nodal values g over a uniform grid of spacing h:
// out[j] = integral from node 0 to node j. Per-cell cubic rule through the
// four nearest nodes, one-sided at the ends; global O(h^4).
std::vector<double> cumulative_uniform(std::span<const double> g, double h);

// Same rule accumulated from the last node: out[j] = integral from node j to
// the last node. Keeps the rounding jitter near the last node proportional
// to the local (small) integral rather than to the global one.
std::vector<double> cumulative_uniform_suffix(std::span<const double> g, double h);

// Gauss-Legendre nodes/weights on [a, b].
struct GaussRule {
    std::vector<double> x, w;
};
GaussRule gauss_legendre(int n, double a, double b);

// Ordinary least squares y ~ slope*x + intercept with R^2.
struct LineFit {
    double slope = 0, intercept = 0, r2 = 0;
};
LineFit line_fit(std::span<const double> x, std::span<const double> y);

// Solve the n x n normal equations of min ||A c - y|| for small n (<= 4).
// A is row-major nrows x ncols. Throws IllConditionedFitError when the
// normal matrix is numerically singular. Returns c and the condition
// estimate of the normal matrix.
struct LsqResult {
    std::vector<double> coeff;
    double cond = 0;
};
LsqResult lsq_small(const std::vector<double>& a, std::size_t nrows, std::size_t ncols,
                    std::span<const double> y);

// C^3 transition: 0 for y <= 0, 1 for y >= 1, degree-7 polynomial between
// (three vanishing derivatives at both ends).
double smoothstep7(double y);
double smoothstep7_d1(double y);
double smoothstep7_d2(double y);

}  // namespace wavemap::num
