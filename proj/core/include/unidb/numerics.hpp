#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace unidb {

// Adaptive Simpson quadrature with absolute tolerance. Recursion depth is
// bounded; the integrands here are smooth so the bound is never reached in
// practice.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth = 48);

// Least-squares slope of log(error) vs log(1/M). Throws on nonpositive
// errors or fewer than two points.
double loglog_slope(const std::vector<double>& m_values, const std::vector<double>& errors);

// Solve a dense k x k linear system by partial-pivot Gaussian elimination.
// Throws std::domain_error on a (numerically) singular matrix.
std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b);

inline double relative_diff(double x, double y) {
    const double scale = std::max(std::abs(x), std::abs(y));
    if (scale == 0.0) return 0.0;
    return std::abs(x - y) / scale;
}

// Difference relative to max(|x|, |y|, 1); used for coefficients whose
// natural scale is unity.
inline double unit_scaled_diff(double x, double y) {
    const double scale = std::max({std::abs(x), std::abs(y), 1.0});
    return std::abs(x - y) / scale;
}

}  // namespace unidb
