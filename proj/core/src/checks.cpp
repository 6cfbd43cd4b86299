#include "unidb/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "unidb/models.hpp"
#include "unidb/numerics.hpp"
#include "unidb/rng.hpp"
#include "unidb/samplers.hpp"

namespace unidb {

namespace {

// t < s pair with both inside the clamped interior.
std::pair<double, double> random_pair(Prng& rng, const Schedule& sched) {
    const double lo = sched.beta_clamp_time();
    const double hi = sched.horizon();
    double a = lo + (hi - lo) * rng.uniform();
    double b = lo + (hi - lo) * rng.uniform();
    if (a < b) std::swap(a, b);
    if (a == b) a = std::min(hi, b + 1e-6 * hi);
    return {a, b};  // (s, t)
}

double max_coeff_diff(const StepCoeffs& a, const StepCoeffs& b) {
    double m = unit_scaled_diff(a.on_prev, b.on_prev);
    m = std::max(m, unit_scaled_diff(a.on_xT, b.on_xT));
    m = std::max(m, unit_scaled_diff(a.on_x0hat, b.on_x0hat));
    m = std::max(m, unit_scaled_diff(a.noise_std, b.noise_std));
    return m;
}

CheckResult check_partition_of_unity(const ValidationConfig& cfg) {
    CheckResult result{"partition_of_unity", false, 0.0, 1e-12, ""};
    Prng rng(cfg.seed, "validate/partition");
    for (const bool force_inf : {false, true}) {
        ScheduleParams p = cfg.schedule;
        if (force_inf) p.gamma = std::numeric_limits<double>::infinity();
        const Schedule sched(p);
        for (int i = 0; i < cfg.samples; ++i) {
            const auto [s, t0] = random_pair(rng, sched);
            const double t = rng.uniform() < 0.05 ? 0.0 : t0;  // exercise the endpoint
            if (!(s > t)) continue;
            const StepCoeffs sc = step_coeffs(sched, s, t);
            const double sum = sc.on_prev + sc.on_xT + sc.on_x0hat;
            result.metric = std::max(result.metric, std::abs(sum - 1.0));
        }
    }
    result.passed = result.metric <= result.bound;
    return result;
}

CheckResult check_semigroup(const ValidationConfig& cfg) {
    CheckResult result{"semigroup_noise_variance", false, 0.0, 1e-10, ""};
    const Schedule sched(cfg.schedule);
    Prng rng(cfg.seed, "validate/semigroup");
    const double lo = sched.beta_clamp_time();
    const double hi = sched.horizon();
    for (int i = 0; i < cfg.samples; ++i) {
        double u[3];
        for (double& v : u) v = lo + (hi - lo) * rng.uniform();
        std::sort(u, u + 3);
        const double t = u[0], r = u[1], s = u[2];
        if (!(s > r && r > t)) continue;
        const double ratio = sched.rho(t) / sched.rho(r);
        const double lhs = ratio * ratio * std::pow(sched.delta_d(s, r), 2) +
                           std::pow(sched.delta_d(r, t), 2);
        const double rhs = std::pow(sched.delta_d(s, t), 2);
        result.metric = std::max(result.metric, relative_diff(lhs, rhs));
    }
    result.passed = result.metric <= result.bound;
    return result;
}

CheckResult check_conversion_roundtrip(const ValidationConfig& cfg) {
    CheckResult result{"roundtrip_data_noise", false, 0.0, 1e-12, ""};
    const Schedule sched(cfg.schedule);
    Prng rng(cfg.seed, "validate/roundtrip");
    const double lo = 0.05 * sched.horizon();
    const double hi = 0.95 * sched.horizon();
    for (int i = 0; i < cfg.samples; ++i) {
        const double t = lo + (hi - lo) * rng.uniform();
        const BridgeCoeffs c = sched.coeffs(t);
        StateVec x_t{2.0 * rng.uniform() - 1.0}, xT{2.0 * rng.uniform() - 1.0},
            eps{2.0 * rng.uniform() - 1.0};
        const StateVec x0 = data_from_noise(c, x_t, xT, eps);
        const StateVec eps_back = noise_from_data(c, x_t, xT, x0);
        result.metric = std::max(result.metric, std::abs(eps_back[0] - eps[0]));
    }
    result.passed = result.metric <= result.bound;
    return result;
}

CheckResult check_beta_roundtrip(const ValidationConfig& cfg) {
    CheckResult result{"roundtrip_beta_inverse", false, 0.0, 1e-10, ""};
    const Schedule sched(cfg.schedule);
    Prng rng(cfg.seed, "validate/beta");
    const double lo = sched.beta_clamp_time();
    const double hi = sched.horizon();
    for (int i = 0; i < std::min(cfg.samples, 200); ++i) {
        const double t = lo + (hi - lo) * rng.uniform();
        const double back = sched.t_of_beta(sched.coeffs(t).beta_t);
        result.metric = std::max(result.metric, std::abs(back - t) / sched.horizon());
    }
    result.passed = result.metric <= result.bound;
    return result;
}

CheckResult check_beta_monotone(const ValidationConfig& cfg) {
    CheckResult result{"beta_monotone_decreasing", false, 0.0, 0.0, ""};
    const Schedule sched(cfg.schedule);
    Prng rng(cfg.seed, "validate/monotone");
    const double lo = sched.beta_clamp_time();
    const double hi = sched.horizon();
    int violations = 0;
    for (int i = 0; i < 1000; ++i) {
        double a = lo + (hi - lo) * rng.uniform();
        double b = lo + (hi - lo) * rng.uniform();
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        if (!(sched.beta(a) > sched.beta(b))) ++violations;
    }
    result.metric = violations;
    result.passed = violations == 0;
    return result;
}

CheckResult check_goub_limit(const ValidationConfig& cfg) {
    CheckResult result{"limit_goub_gamma_ladder", false, 0.0, 1e-6, ""};
    const std::vector<double> gammas{1e3, 1e6, 1e9, 1e12};
    const auto ladder = goub_limit_ladder(cfg.schedule, gammas, 40);
    bool decreasing = true;
    for (std::size_t i = 1; i < ladder.size(); ++i) {
        if (!(ladder[i] < ladder[i - 1])) decreasing = false;
    }
    result.metric = ladder.back();
    result.passed = decreasing && ladder.back() <= result.bound;
    std::ostringstream os;
    for (double v : ladder) os << v << ' ';
    result.detail = os.str();
    return result;
}

CheckResult check_dbim_ve_recovery(const ValidationConfig& cfg) {
    CheckResult result{"prop_dbim_ve_recovery", false, 0.0, 1e-3, ""};
    (void)cfg;
    const std::vector<double> rates{1e-2, 1e-3, 1e-4};
    const auto ladder = dbim_ve_recovery_ladder(rates, 1e12, 30);
    bool decreasing = true;
    for (std::size_t i = 1; i < ladder.size(); ++i) {
        if (!(ladder[i] < ladder[i - 1])) decreasing = false;
    }
    result.metric = ladder.back();
    result.passed = decreasing && ladder.back() <= result.bound;
    std::ostringstream os;
    for (double v : ladder) os << v << ' ';
    result.detail = os.str();
    return result;
}

CheckResult check_dbim_vp_identities(const ValidationConfig& cfg) {
    CheckResult result{"limit_dbim_vp_identities", false, 0.0, 1e-9, ""};
    result.metric = dbim_vp_identity_max_error(cfg.schedule, std::min(cfg.samples, 1000),
                                               cfg.seed);
    result.passed = result.metric <= result.bound;
    return result;
}

}  // namespace

std::vector<CheckResult> run_validation_suite(const ValidationConfig& config,
                                              const std::string& filter) {
    std::vector<CheckResult> all;
    all.push_back(check_partition_of_unity(config));
    all.push_back(check_semigroup(config));
    all.push_back(check_conversion_roundtrip(config));
    all.push_back(check_beta_roundtrip(config));
    all.push_back(check_beta_monotone(config));
    all.push_back(check_goub_limit(config));
    all.push_back(check_dbim_ve_recovery(config));
    all.push_back(check_dbim_vp_identities(config));
    if (filter.empty()) return all;
    std::vector<CheckResult> kept;
    for (auto& c : all) {
        if (c.name.find(filter) != std::string::npos) kept.push_back(std::move(c));
    }
    return kept;
}

std::vector<double> goub_limit_ladder(ScheduleParams params, const std::vector<double>& gammas,
                                      int grid_n) {
    ScheduleParams inf_params = params;
    inf_params.gamma = std::numeric_limits<double>::infinity();
    const Schedule sched_inf(inf_params);
    const double T = sched_inf.horizon();
    std::vector<double> grid(static_cast<std::size_t>(grid_n));
    for (int i = 0; i < grid_n; ++i) {
        grid[static_cast<std::size_t>(i)] = 0.05 * T + (0.95 * T) * i / (grid_n - 1);
    }
    std::vector<double> ladder;
    for (double gamma : gammas) {
        ScheduleParams p = params;
        p.gamma = gamma;
        const Schedule sched(p);
        double worst = 0.0;
        for (int j = 1; j < grid_n; ++j) {
            for (int i = 0; i < j; ++i) {
                const double s = grid[static_cast<std::size_t>(j)];
                const double t = grid[static_cast<std::size_t>(i)];
                const StepCoeffs a = step_coeffs(sched, s, t);
                const StepCoeffs b = limit_coeffs(LimitMode::goub, sched_inf, s, t);
                worst = std::max(worst, max_coeff_diff(a, b));
            }
        }
        ladder.push_back(worst);
    }
    return ladder;
}

std::vector<double> dbim_ve_recovery_ladder(const std::vector<double>& theta_rates,
                                            double gamma, int grid_n) {
    std::vector<double> ladder;
    for (double rate : theta_rates) {
        ScheduleParams p;
        p.kind = ScheduleKind::constant;
        p.theta0 = rate;
        p.horizon = 1.0;
        p.lambda2 = 1.0;
        p.gamma = gamma;
        p.theta_scale = 1.0;  // keep the raw rate; no terminal normalization
        const Schedule sched(p);
        std::vector<double> grid(static_cast<std::size_t>(grid_n));
        for (int i = 0; i < grid_n; ++i) {
            grid[static_cast<std::size_t>(i)] = 0.05 + 0.95 * i / (grid_n - 1);
        }
        double worst = 0.0;
        for (int j = 1; j < grid_n; ++j) {
            for (int i = 0; i < j; ++i) {
                const double s = grid[static_cast<std::size_t>(j)];
                const double t = grid[static_cast<std::size_t>(i)];
                const StepCoeffs a = step_coeffs(sched, s, t);
                const StepCoeffs b = limit_coeffs(LimitMode::dbim_ve, sched, s, t);
                worst = std::max(worst, max_coeff_diff(a, b));
            }
        }
        ladder.push_back(worst);
    }
    return ladder;
}

double dbim_vp_identity_max_error(ScheduleParams params, int samples, std::uint64_t seed) {
    params.lambda2 = 1.0;
    params.gamma = std::numeric_limits<double>::infinity();
    const Schedule sched(params);
    Prng rng(seed, "validate/dbim-vp");
    const double lo = 0.02 * sched.horizon();
    const double hi = 0.98 * sched.horizon();
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        double s = lo + (hi - lo) * rng.uniform();
        double t = lo + (hi - lo) * rng.uniform();
        if (s < t) std::swap(s, t);
        if (s == t) continue;
        const StepCoeffs u = limit_coeffs(LimitMode::goub, sched, s, t);
        const StepCoeffs v = limit_coeffs(LimitMode::dbim_vp, sched, s, t);
        worst = std::max(worst, unit_scaled_diff(u.on_prev, v.on_prev));
        worst = std::max(worst, std::abs(v.on_xT));  // xT-coefficient vanishes
        worst = std::max(worst, unit_scaled_diff(u.on_x0hat, v.on_x0hat));
        worst = std::max(worst, unit_scaled_diff(u.noise_std, v.noise_std));
    }
    return worst;
}

}  // namespace unidb
