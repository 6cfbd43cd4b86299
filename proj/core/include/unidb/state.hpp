#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <utility>
#include <vector>

namespace unidb {

// d-dimensional real state; carries x_t, x_0, x_T and noise realizations.
using StateVec = std::vector<double>;

inline void require_same_dim(const StateVec& a, const StateVec& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("state dimension mismatch");
    }
}

inline StateVec constant_state(std::size_t dim, double value) {
    return StateVec(dim, value);
}

// out = sum_i coeff_i * vec_i, all vectors the same length.
inline StateVec lincomb(std::initializer_list<std::pair<double, const StateVec*>> terms) {
    if (terms.size() == 0) return {};
    const std::size_t dim = terms.begin()->second->size();
    StateVec out(dim, 0.0);
    for (const auto& [c, v] : terms) {
        if (v->size() != dim) throw std::invalid_argument("state dimension mismatch");
        for (std::size_t i = 0; i < dim; ++i) out[i] += c * (*v)[i];
    }
    return out;
}

inline void axpy(double a, const StateVec& x, StateVec& y) {
    require_same_dim(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline double rmse(const StateVec& a, const StateVec& b) {
    require_same_dim(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return a.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(a.size()));
}

inline double max_abs_diff(const StateVec& a, const StateVec& b) {
    require_same_dim(a, b);
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        if (d > m) m = d;
    }
    return m;
}

}  // namespace unidb
