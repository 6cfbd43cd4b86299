#include "unidb/schedule.hpp"

#include <algorithm>
#include <stdexcept>

#include "unidb/numerics.hpp"

namespace unidb {

namespace {

constexpr int kTableKnots = 4096;
constexpr double kIntervalTol = 1e-14;
constexpr double kPi = 3.141592653589793238462643383279502884;

}  // namespace

Schedule::Schedule(ScheduleParams params) : params_(params) {
    validate();
    inv_gamma_lambda2_ =
        gamma_is_infinite() ? 0.0 : 1.0 / (params_.gamma * params_.lambda2);

    const double T = params_.horizon;
    if (params_.kind == ScheduleKind::flipped_cosine) {
        knots_.resize(kTableKnots);
        cum_.resize(kTableKnots);
        for (int j = 0; j < kTableKnots; ++j) {
            knots_[j] = 0.5 * T * (1.0 - std::cos(kPi * j / (kTableKnots - 1)));
        }
        knots_.front() = 0.0;
        knots_.back() = T;
        cum_[0] = 0.0;
        auto f = [this](double t) { return theta_raw(t); };
        for (int j = 1; j < kTableKnots; ++j) {
            cum_[j] = cum_[j - 1] +
                      adaptive_simpson(f, knots_[j - 1], knots_[j], kIntervalTol);
        }
    }

    const double raw_total = cumulative_raw(T);
    if (!(raw_total > 0.0)) {
        throw std::invalid_argument("schedule: raw cumulative rate must be positive");
    }
    if (params_.theta_scale > 0.0) {
        scale_ = params_.theta_scale;
    } else {
        double target;
        if (params_.terminal_convention == TerminalConvention::decay_equals) {
            if (!(params_.terminal_decay > 0.0 && params_.terminal_decay < 1.0)) {
                throw std::invalid_argument(
                    "schedule: terminal_decay must lie in (0,1) for the decay convention");
            }
            target = -std::log(params_.terminal_decay);
        } else {
            if (!(params_.terminal_decay > 1.0)) {
                throw std::invalid_argument(
                    "schedule: the growth convention needs a terminal value > 1 "
                    "(a decaying bridge cannot satisfy e^{theta_bar_T} < 1)");
            }
            target = std::log(params_.terminal_decay);
        }
        scale_ = target / raw_total;
    }
    theta_bar_T_ = scale_ * raw_total;
    terminal_decay_ = std::exp(-theta_bar_T_);
}

void Schedule::validate() const {
    if (!(params_.horizon > 0.0)) throw std::invalid_argument("schedule: horizon must be > 0");
    if (!(params_.lambda2 > 0.0)) throw std::invalid_argument("schedule: lambda2 must be > 0");
    if (!(params_.gamma > 0.0)) throw std::invalid_argument("schedule: gamma must be > 0");
    if (params_.kind == ScheduleKind::constant && !(params_.theta0 > 0.0)) {
        throw std::invalid_argument("schedule: theta0 must be > 0");
    }
    if (params_.kind == ScheduleKind::flipped_cosine && !(params_.cosine_offset > 0.0)) {
        throw std::invalid_argument("schedule: cosine offset must be > 0");
    }
    if (params_.theta_scale < 0.0) {
        throw std::invalid_argument("schedule: theta_scale must be positive when set");
    }
}

double Schedule::theta_raw(double t) const {
    if (params_.kind == ScheduleKind::constant) return params_.theta0;
    const double s = params_.cosine_offset;
    const double u = (t / params_.horizon + s) / (1.0 + s) * (kPi / 2.0);
    const double u0 = s / (1.0 + s) * (kPi / 2.0);
    const double c = std::cos(u);
    const double c0 = std::cos(u0);
    const double value = 1.0 - (c * c) / (c0 * c0);
    return value > 0.0 ? value : 0.0;
}

double Schedule::theta(double t) const {
    if (t < 0.0 || t > params_.horizon) {
        throw std::domain_error("schedule: time outside [0, T]");
    }
    return scale_ * theta_raw(t);
}

double Schedule::cumulative_raw(double t) const {
    if (params_.kind == ScheduleKind::constant) return params_.theta0 * t;
    if (t <= 0.0) return 0.0;
    if (t >= params_.horizon) return cum_.back();
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    const auto j = static_cast<std::size_t>(it - knots_.begin()) - 1;
    auto f = [this](double x) { return theta_raw(x); };
    return cum_[j] + adaptive_simpson(f, knots_[j], t, kIntervalTol);
}

double Schedule::theta_bar_from0(double t) const {
    if (t < 0.0 || t > params_.horizon) {
        throw std::domain_error("schedule: time outside [0, T]");
    }
    return scale_ * cumulative_raw(t);
}

double Schedule::theta_bar(double t0, double t1) const {
    if (t0 > t1) throw std::domain_error("schedule: theta_bar needs t0 <= t1");
    const double v = theta_bar_from0(t1) - theta_bar_from0(t0);
    return v > 0.0 ? v : 0.0;
}

double Schedule::rho(double t) const {
    const double tb = theta_bar_from0(t);
    return std::exp(tb) * (-std::expm1(-2.0 * tb));
}

double Schedule::kappa(double t) const {
    const double tbT = theta_bar(t, params_.horizon);
    return std::exp(tbT) * (inv_gamma_lambda2_ - std::expm1(-2.0 * tbT));
}

double Schedule::kappa_inf(double t) const {
    const double tbT = theta_bar(t, params_.horizon);
    return std::exp(tbT) * (-std::expm1(-2.0 * tbT));
}

double Schedule::beta(double t) const { return std::log(kappa(t) / rho(t)); }

BridgeCoeffs Schedule::coeffs(double t) const {
    if (t < 0.0 || t > params_.horizon) {
        throw std::domain_error("schedule: time outside [0, T]");
    }
    BridgeCoeffs c;
    c.t = t;
    c.theta_t = theta(t);
    const double cum_t = theta_bar_from0(t);
    const double cum_T = theta_bar_from0(params_.horizon);
    c.theta_bar_t = cum_t;
    c.theta_bar_tT = std::max(0.0, cum_T - cum_t);
    c.sigma2_t = params_.lambda2 * (-std::expm1(-2.0 * c.theta_bar_t));
    c.sigma2_tT = params_.lambda2 * (-std::expm1(-2.0 * c.theta_bar_tT));
    const double sigma2_T = params_.lambda2 * (-std::expm1(-2.0 * cum_T));
    c.sigma_prime2_t = sigma2_T > 0.0 ? c.sigma2_t * c.sigma2_tT / sigma2_T : 0.0;
    const double p_t = inv_gamma_lambda2_ - std::expm1(-2.0 * c.theta_bar_tT);
    const double p_0 = inv_gamma_lambda2_ - std::expm1(-2.0 * cum_T);
    c.xi_t = std::exp(-c.theta_bar_t) * (p_t / p_0);
    c.kappa_t = std::exp(c.theta_bar_tT) * p_t;
    c.rho_t = std::exp(c.theta_bar_t) * (-std::expm1(-2.0 * c.theta_bar_t));
    c.beta_t = std::log(c.kappa_t / c.rho_t);
    return c;
}

double Schedule::t_of_beta(double beta_value) const {
    const double lo = beta_clamp_time();
    const double hi = params_.horizon;
    const double beta_hi = beta(lo);  // beta is decreasing: max at the clamp
    const double beta_lo = beta(hi);
    const double tol = 1e-12 * std::max(1.0, std::abs(beta_value));
    const double slack = 1e-9 * std::max(1.0, std::abs(beta_value));
    if (!(beta_value >= beta_lo - slack && beta_value <= beta_hi + slack)) {
        throw std::domain_error("schedule: beta outside the invertible range");
    }
    if (beta_value >= beta_hi) return lo;
    if (beta_value <= beta_lo) return hi;
    double a = lo, b = hi;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (a + b);
        const double bm = beta(mid);
        if (std::abs(bm - beta_value) <= tol) return mid;
        if (bm > beta_value) {
            a = mid;  // beta too large -> move later in time
        } else {
            b = mid;
        }
        if (b - a <= 1e-17 * params_.horizon) break;
    }
    return 0.5 * (a + b);
}

double Schedule::delta_d(double s, double t) const {
    if (t > s) throw std::domain_error("schedule: delta_d needs t <= s");
    if (s > params_.horizon || t < 0.0) {
        throw std::domain_error("schedule: time outside [0, T]");
    }
    // lambda^2 rho_t^2 (1/E_t - 1/E_s) with E_u = e^{2 theta_bar_u} - 1,
    // rearranged so t = 0 (E_t = 0) gives exactly 0.
    const double tb_t = theta_bar_from0(t);
    const double tb_s = theta_bar_from0(s);
    const double e_t = std::expm1(2.0 * tb_t);
    const double e_s = std::expm1(2.0 * tb_s);
    if (e_s <= 0.0) return 0.0;  // s = 0 forces t = 0
    const double var =
        params_.lambda2 * std::exp(-2.0 * tb_t) * e_t * std::max(0.0, e_s - e_t) / e_s;
    return std::sqrt(var);
}

double Schedule::delta_n(double s, double t) const {
    if (t > s) throw std::domain_error("schedule: delta_n needs t <= s");
    if (s > params_.horizon || t < 0.0) {
        throw std::domain_error("schedule: time outside [0, T]");
    }
    if (s == t) return 0.0;
    // lambda^2 kappa_t^2 (1/D_s - 1/D_t) with
    // D_u = (gamma lambda^2)^{-1} + 1 - e^{-2 theta_bar_{u:T}}.
    // D_s = 0 (gamma infinite, s = T) yields +infinity, matching the limit.
    const double d_t = inv_gamma_lambda2_ - std::expm1(-2.0 * theta_bar(t, params_.horizon));
    const double d_s = inv_gamma_lambda2_ - std::expm1(-2.0 * theta_bar(s, params_.horizon));
    const double tbT_t = theta_bar(t, params_.horizon);
    const double var = params_.lambda2 * std::exp(2.0 * tbT_t) * d_t *
                       std::max(0.0, d_t - d_s) / d_s;
    return std::sqrt(var);
}

}  // namespace unidb
