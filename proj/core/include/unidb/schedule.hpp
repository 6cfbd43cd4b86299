#pragma once

#include <cmath>
#include <vector>

namespace unidb {

enum class ScheduleKind { constant, flipped_cosine };

// How the terminal_decay value is read when deriving theta_scale.
//   decay_equals:  e^{-theta_bar_T} = terminal_decay   (default)
//   growth_equals: e^{+theta_bar_T} = terminal_decay   (requires a value > 1)
enum class TerminalConvention { decay_equals, growth_equals };

inline constexpr double kDefaultLambda2 = (30.0 * 30.0) / (255.0 * 255.0);

struct ScheduleParams {
    ScheduleKind kind = ScheduleKind::flipped_cosine;
    double horizon = 1.0;                // T
    double lambda2 = kDefaultLambda2;    // steady variance level
    double gamma = 100.0;                // terminal penalty; +infinity is the exact Doob limit
    double theta0 = 1.0;                 // rate of the constant schedule
    double cosine_offset = 0.008;        // s in the flipped-cosine schedule
    double theta_scale = 0.0;            // explicit multiplier; 0 derives it from terminal_decay
    double terminal_decay = 0.005;
    TerminalConvention terminal_convention = TerminalConvention::decay_equals;
};

// All per-time derived scalars used by the bridge and the solvers.
// beta_t is +infinity at t = 0 and -infinity at t = T when gamma is infinite;
// callers combine kappa/rho directly instead of exponentiating beta.
struct BridgeCoeffs {
    double t = 0.0;
    double theta_t = 0.0;
    double theta_bar_t = 0.0;   // integral of theta over [0, t]
    double theta_bar_tT = 0.0;  // integral of theta over [t, T]
    double sigma2_t = 0.0;      // lambda^2 (1 - e^{-2 theta_bar_t})
    double sigma2_tT = 0.0;
    double sigma_prime2_t = 0.0;
    double xi_t = 0.0;
    double kappa_t = 0.0;       // gamma-dependent
    double rho_t = 0.0;
    double beta_t = 0.0;        // log(kappa/rho)
};

// Deterministic, immutable schedule evaluator. Construction normalizes the
// raw schedule so that theta_bar_T matches the requested terminal decay and
// builds a cumulative table (Chebyshev-Lobatto knots) so that interior
// queries cost a short local quadrature instead of an integral from 0.
class Schedule {
public:
    explicit Schedule(ScheduleParams params);

    const ScheduleParams& params() const { return params_; }
    double horizon() const { return params_.horizon; }
    double lambda2() const { return params_.lambda2; }
    double lambda() const { return std::sqrt(params_.lambda2); }
    double gamma() const { return params_.gamma; }
    bool gamma_is_infinite() const { return std::isinf(params_.gamma); }
    // (gamma lambda^2)^{-1}; exactly 0 in the infinite-gamma limit.
    double inv_gamma_lambda2() const { return inv_gamma_lambda2_; }
    double theta_scale() const { return scale_; }
    double terminal_decay() const { return terminal_decay_; }
    double theta_bar_T() const { return theta_bar_T_; }
    // Lower clamp for beta-space operations (beta diverges as t -> 0).
    double beta_clamp_time() const { return 1e-5 * params_.horizon; }

    double theta(double t) const;
    double theta_bar(double t0, double t1) const;
    double theta_bar_from0(double t) const;
    // g_t^2 = 2 lambda^2 theta_t
    double g2(double t) const { return 2.0 * params_.lambda2 * theta(t); }

    BridgeCoeffs coeffs(double t) const;
    double rho(double t) const;
    double kappa(double t) const;      // gamma from the params
    double kappa_inf(double t) const;  // exact gamma = infinity value
    double beta(double t) const;

    // Inverse of the strictly decreasing map t -> beta_t on [clamp, T].
    double t_of_beta(double beta_value) const;

    // Std dev of the exact-solution noise over a reverse step s -> t
    // (data-parameterized solver).
    double delta_d(double s, double t) const;
    // Noise-parameterized counterpart; +infinity at s = T when gamma is
    // infinite, which is why that solver clamps its initial node.
    double delta_n(double s, double t) const;

private:
    void validate() const;
    double theta_raw(double t) const;       // unscaled schedule
    double cumulative_raw(double t) const;  // unscaled integral over [0, t]

    ScheduleParams params_;
    double inv_gamma_lambda2_ = 0.0;
    double scale_ = 1.0;
    double terminal_decay_ = 0.0;
    double theta_bar_T_ = 0.0;
    std::vector<double> knots_;
    std::vector<double> cum_;  // raw cumulative at the knots
};

}  // namespace unidb
