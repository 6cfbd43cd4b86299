#include "unidb/samplers.hpp"

#include <cmath>
#include <stdexcept>

#include "unidb/numerics.hpp"

namespace unidb {

namespace {

double kappa_mode(const Schedule& sched, double t, bool inf_mode) {
    return inf_mode ? sched.kappa_inf(t) : sched.kappa(t);
}

double beta_mode(const Schedule& sched, double t, bool inf_mode) {
    return std::log(kappa_mode(sched, t, inf_mode) / sched.rho(t));
}

StepCoeffs step_coeffs_mode(const Schedule& sched, double s, double t, bool inf_mode) {
    if (!(s > t)) throw std::domain_error("samplers: step needs s > t");
    if (s > sched.horizon() || t < 0.0) {
        throw std::domain_error("samplers: times outside [0, T]");
    }
    const double rho_T = sched.rho(sched.horizon());
    const double rho_s = sched.rho(s);
    const double rho_t = sched.rho(t);
    const double kap_s = kappa_mode(sched, s, inf_mode);
    const double kap_t = kappa_mode(sched, t, inf_mode);
    StepCoeffs sc;
    sc.on_prev = rho_t / rho_s;
    sc.on_xT = 1.0 - rho_t / rho_s + (rho_t / rho_s) * (kap_s / rho_T) - kap_t / rho_T;
    sc.on_x0hat = kap_t / rho_T - (rho_t / rho_s) * (kap_s / rho_T);
    sc.noise_std = sched.delta_d(s, t);
    return sc;
}

StateVec apply_step(const StepCoeffs& sc, const StateVec& x_s, const StateVec& xT,
                    const StateVec& x0hat, Prng* rng) {
    StateVec out = lincomb({{sc.on_prev, &x_s}, {sc.on_xT, &xT}, {sc.on_x0hat, &x0hat}});
    if (rng != nullptr && sc.noise_std > 0.0) {
        for (double& v : out) v += sc.noise_std * rng->normal();
    }
    return out;
}

// e^{-h} + h - 1, stable for small h.
double exp_kernel(double h) { return std::expm1(-h) + h; }

// Second-order singlestep update given the prediction at s; evaluates the
// model once more at the intermediate node.
StateVec step2_single_impl(const Schedule& sched, const PredictionModel& model,
                           const StateVec& x_s, const StateVec& xT, double s, double t,
                           double r, Prng* rng, bool inf_mode, const StateVec& x0hat_s) {
    const StepCoeffs sc = step_coeffs_mode(sched, s, t, inf_mode);
    const double beta_s = beta_mode(sched, s, inf_mode);
    const double beta_t = beta_mode(sched, t, inf_mode);
    const double h = beta_t - beta_s;
    if (h == 0.0) throw std::domain_error("samplers: degenerate step (h = 0)");
    if (!std::isfinite(beta_s) || !std::isfinite(h)) {
        // beta is unbounded at s = T (Doob limit) and at t = 0; the
        // derivative approximation is undefined there, so take the
        // first-order update.
        return apply_step(sc, x_s, xT, x0hat_s, rng);
    }
    const double s_mid = time_of_beta(sched, beta_s + r * h, inf_mode);
    const StepCoeffs sc_mid = step_coeffs_mode(sched, s, s_mid, inf_mode);
    const StateVec y = apply_step(sc_mid, x_s, xT, x0hat_s, rng);
    const StateVec x0hat_mid = model.predict_data(sched.coeffs(s_mid), y, xT);

    StateVec out = apply_step(sc, x_s, xT, x0hat_s, rng);
    const double kap_t = kappa_mode(sched, t, inf_mode);
    const double corr = (kap_t / sched.rho(sched.horizon())) * exp_kernel(h) / (r * h);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += corr * (x0hat_mid[i] - x0hat_s[i]);
    }
    return out;
}

StateVec step2_multi_impl(const Schedule& sched, const StateVec& x_s, const StateVec& xT,
                          double s, double t, const MultistepHistory& history, Prng* rng,
                          bool inf_mode, const StateVec& x0hat_s) {
    const StepCoeffs sc = step_coeffs_mode(sched, s, t, inf_mode);
    StateVec out = apply_step(sc, x_s, xT, x0hat_s, rng);
    const double h = beta_mode(sched, t, inf_mode) - beta_mode(sched, s, inf_mode);
    if (!std::isfinite(h) || !std::isfinite(history.h_prev) || history.h_prev == 0.0) {
        return out;  // backward difference undefined across an unbounded beta gap
    }
    const double kap_t = kappa_mode(sched, t, inf_mode);
    const double corr =
        (kap_t / sched.rho(sched.horizon())) * exp_kernel(h) / history.h_prev;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += corr * (x0hat_s[i] - history.x0hat_prev[i]);
    }
    return out;
}

// First-order noise-parameterized update given the noise prediction at s.
StateVec noise_fo_update(const Schedule& sched, const StateVec& x_s, const StateVec& xT,
                         double s, double t, bool inf_mode, const StateVec& eps,
                         Prng* rng) {
    const double kap_s = kappa_mode(sched, s, inf_mode);
    const double kap_t = kappa_mode(sched, t, inf_mode);
    if (!(kap_s > 0.0)) {
        throw std::domain_error(
            "samplers: noise-parameterized step undefined at s = T in the Doob limit");
    }
    const double rho_T = sched.rho(sched.horizon());
    const double contraction = kap_t / kap_s;
    const double eps_coeff = -2.0 * (sched.lambda() * kap_t / std::sqrt(rho_T)) *
                             (std::sqrt(sched.rho(s) / kap_s) - std::sqrt(sched.rho(t) / kap_t));
    StateVec out = lincomb({{contraction, &x_s}, {1.0 - contraction, &xT}});
    axpy(eps_coeff, eps, out);
    if (rng != nullptr) {
        const double sd = sched.delta_n(s, t);
        if (sd > 0.0) {
            for (double& v : out) v += sd * rng->normal();
        }
    }
    return out;
}

StateVec noise_step_2_single_impl(const Schedule& sched, const PredictionModel& model,
                                  const StateVec& x_s, const StateVec& xT, double s, double t,
                                  double r, Prng* rng, bool inf_mode, const StateVec& eps_s) {
    const double beta_s = beta_mode(sched, s, inf_mode);
    const double beta_t = beta_mode(sched, t, inf_mode);
    const double h = beta_t - beta_s;
    if (!std::isfinite(beta_s) || !std::isfinite(h)) {
        return noise_fo_update(sched, x_s, xT, s, t, inf_mode, eps_s, rng);
    }
    const double s_mid = time_of_beta(sched, beta_s + r * h, inf_mode);
    const StateVec y = noise_fo_update(sched, x_s, xT, s, s_mid, inf_mode, eps_s, rng);
    const StateVec eps_mid = model.predict_noise(sched.coeffs(s_mid), y, xT);

    StateVec out = noise_fo_update(sched, x_s, xT, s, t, inf_mode, eps_s, rng);
    const double kap_t = kappa_mode(sched, t, inf_mode);
    const double half_kernel = std::expm1(0.5 * h) - 0.5 * h;  // e^{h/2} - h/2 - 1
    const double corr = -4.0 * (sched.lambda() * kap_t / std::sqrt(sched.rho(sched.horizon()))) *
                        std::sqrt(sched.rho(t) / kap_t) * half_kernel / (r * h);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += corr * (eps_mid[i] - eps_s[i]);
    }
    return out;
}

StateVec noise_step_2_multi_impl(const Schedule& sched, const StateVec& x_s,
                                 const StateVec& xT, double s, double t,
                                 const MultistepHistory& history, Prng* rng, bool inf_mode,
                                 const StateVec& eps_s) {
    StateVec out = noise_fo_update(sched, x_s, xT, s, t, inf_mode, eps_s, rng);
    const double h = beta_mode(sched, t, inf_mode) - beta_mode(sched, s, inf_mode);
    if (!std::isfinite(h) || !std::isfinite(history.h_prev) || history.h_prev == 0.0) {
        return out;
    }
    const double kap_t = kappa_mode(sched, t, inf_mode);
    const double half_kernel = std::expm1(0.5 * h) - 0.5 * h;
    const double corr = -4.0 * (sched.lambda() * kap_t / std::sqrt(sched.rho(sched.horizon()))) *
                        std::sqrt(sched.rho(t) / kap_t) * half_kernel / history.h_prev;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += corr * (eps_s[i] - history.x0hat_prev[i]);
    }
    return out;
}

}  // namespace

void SamplerSpec::validate() const {
    if (order != 1 && order != 2) {
        throw std::invalid_argument("sampler: order must be 1 or 2");
    }
    if (family == SamplerFamily::euler) {
        if (order != 1) throw std::invalid_argument("sampler: euler supports order 1 only");
        if (corrector.enabled) {
            throw std::invalid_argument("sampler: corrector requires the unidbpp family");
        }
    }
    if (order == 2 && stepping == Stepping::singlestep) {
        if (!(singlestep_r > 0.0 && singlestep_r < 1.0)) {
            throw std::invalid_argument("sampler: singlestep r must lie in (0,1)");
        }
    }
    if (corrector.enabled) {
        if (family != SamplerFamily::unidbpp || process != ProcessKind::sde) {
            throw std::invalid_argument("sampler: corrector requires unidbpp SDE");
        }
        if (parameterization != Parameterization::data) {
            throw std::invalid_argument("sampler: corrector requires the data parameterization");
        }
        if (order != 1) {
            throw std::invalid_argument("sampler: corrector pairs with the first-order predictor");
        }
        if (corrector.k < 1 || corrector.r.size() != static_cast<std::size_t>(corrector.k)) {
            throw std::invalid_argument("sampler: corrector r sequence must have k entries");
        }
        double prev = 0.0;
        for (double r : corrector.r) {
            if (!(r > prev)) throw std::invalid_argument("sampler: corrector r must increase");
            prev = r;
        }
        if (std::abs(corrector.r.back() - 1.0) > 1e-12) {
            throw std::invalid_argument("sampler: corrector r must end at 1");
        }
        if (corrector.form == CorrectorForm::algorithm && corrector.k != 1) {
            throw std::invalid_argument("sampler: the anchorless corrector form is k = 1 only");
        }
    }
}

std::string SamplerSpec::id() const {
    std::string name;
    switch (limit_mode) {
        case LimitMode::unidb: break;
        case LimitMode::goub: name = "goub-"; break;
        default: name = "limit-"; break;
    }
    name += family == SamplerFamily::euler ? "euler" : "unidbpp";
    name += process == ProcessKind::sde ? "-sde" : "-ode";
    if (family == SamplerFamily::unidbpp) {
        name += "-";
        name += std::to_string(order);
        if (order == 2) name += stepping == Stepping::singlestep ? "s" : "m";
        if (corrector.enabled) name += "c";
    }
    if (parameterization == Parameterization::noise) name += "-n";
    return name;
}

SamplerSpec parse_sampler_id(const std::string& name) {
    SamplerSpec spec;
    std::string rest = name;
    auto take_prefix = [&rest](const std::string& prefix) {
        if (rest.rfind(prefix, 0) == 0) {
            rest = rest.substr(prefix.size());
            return true;
        }
        return false;
    };
    if (take_prefix("goub-")) spec.limit_mode = LimitMode::goub;
    if (take_prefix("euler")) {
        spec.family = SamplerFamily::euler;
    } else if (take_prefix("unidbpp")) {
        spec.family = SamplerFamily::unidbpp;
    } else {
        throw std::invalid_argument("sampler: unknown name '" + name + "'");
    }
    if (take_prefix("-sde")) {
        spec.process = ProcessKind::sde;
    } else if (take_prefix("-ode")) {
        spec.process = ProcessKind::mean_ode;
    } else {
        throw std::invalid_argument("sampler: unknown name '" + name + "'");
    }
    if (spec.family == SamplerFamily::unidbpp) {
        if (take_prefix("-1")) {
            spec.order = 1;
        } else if (take_prefix("-2")) {
            spec.order = 2;
            if (take_prefix("s")) {
                spec.stepping = Stepping::singlestep;
            } else if (take_prefix("m")) {
                spec.stepping = Stepping::multistep;
            } else {
                throw std::invalid_argument("sampler: unknown name '" + name + "'");
            }
        } else {
            throw std::invalid_argument("sampler: unknown name '" + name + "'");
        }
        if (take_prefix("c")) {
            spec.corrector.enabled = true;
        }
    }
    if (take_prefix("-n")) spec.parameterization = Parameterization::noise;
    if (!rest.empty()) throw std::invalid_argument("sampler: unknown name '" + name + "'");
    spec.validate();
    return spec;
}

StepCoeffs step_coeffs(const Schedule& sched, double s, double t) {
    return step_coeffs_mode(sched, s, t, false);
}

StepCoeffs limit_coeffs(LimitMode mode, const Schedule& sched, double s, double t) {
    if (mode == LimitMode::unidb) return step_coeffs_mode(sched, s, t, false);
    if (mode == LimitMode::goub) return step_coeffs_mode(sched, s, t, true);
    if (!(s >= t) || s > sched.horizon() || t < 0.0) {
        throw std::domain_error("samplers: need T >= s >= t >= 0");
    }

    const double T = sched.horizon();
    StepCoeffs sc;
    if (mode == LimitMode::dbim_ve || mode == LimitMode::unidb_ve) {
        // Variance-exploding ladder: sigma_u^2 = 2 lambda^2 theta_bar_u.
        const double two_l2 = 2.0 * sched.lambda2();
        const double s2_t = two_l2 * sched.theta_bar_from0(t);
        const double s2_s = two_l2 * sched.theta_bar_from0(s);
        const double s2_T = two_l2 * sched.theta_bar_from0(T);
        double a_t, a_s, b_t, b_s;
        if (mode == LimitMode::dbim_ve) {
            a_t = s2_t / s2_T;
            a_s = s2_s / s2_T;
            b_t = 1.0 - a_t;
            b_s = 1.0 - a_s;
        } else {
            const double inv_gamma = sched.gamma_is_infinite() ? 0.0 : 1.0 / sched.gamma();
            a_t = s2_t / (inv_gamma + s2_T);
            a_s = s2_s / (inv_gamma + s2_T);
            b_t = 1.0 - a_t;
            b_s = 1.0 - a_s;
        }
        if (s == t) {
            sc.on_prev = 1.0;
            sc.on_xT = a_t - a_s;
            sc.on_x0hat = b_t - b_s;
            sc.noise_std = 0.0;
            return sc;
        }
        const double contraction = s2_t / s2_s;  // closed form of sqrt(c_t^2 - zeta^2)/c_s
        sc.on_prev = contraction;
        sc.on_xT = a_t - a_s * contraction;
        sc.on_x0hat = b_t - b_s * contraction;
        sc.noise_std = std::sqrt(std::max(0.0, s2_t * (1.0 - s2_t / s2_s)));
        return sc;
    }

    // Variance-preserving ladder: alpha_u = e^{-theta_bar_u},
    // sigma_u^2 = 1 - e^{-2 theta_bar_u}.
    const double tb_t = sched.theta_bar_from0(t);
    const double tb_s = sched.theta_bar_from0(s);
    const double tb_T = sched.theta_bar_from0(T);
    const double al_t = std::exp(-tb_t);
    const double al_s = std::exp(-tb_s);
    const double al_T = std::exp(-tb_T);
    const double s2_t = -std::expm1(-2.0 * tb_t);
    const double s2_s = -std::expm1(-2.0 * tb_s);
    const double s2_T = -std::expm1(-2.0 * tb_T);
    double a_t, a_s, b_t, b_s;
    if (mode == LimitMode::dbim_vp) {
        a_t = al_T * s2_t / (al_t * s2_T);
        a_s = al_T * s2_s / (al_s * s2_T);
        b_t = al_t * (1.0 - (al_T * al_T * s2_t) / (al_t * al_t * s2_T));
        b_s = al_s * (1.0 - (al_T * al_T * s2_s) / (al_s * al_s * s2_T));
    } else {  // unidb_vp
        const double inv_gamma = sched.gamma_is_infinite() ? 0.0 : 1.0 / sched.gamma();
        const auto a_prime = [&](double al_u, double s2_u) {
            const double q = (al_u * al_u * al_T) / (s2_u * s2_T);
            const double snr_u = (al_u * al_u) / s2_u;
            const double snr_T = (al_T * al_T) / s2_T;
            return al_u * (1.0 - (q * inv_gamma + snr_T) / (q * inv_gamma + snr_u));
        };
        a_t = a_prime(al_t, s2_t);
        a_s = a_prime(al_s, s2_s);
        b_t = 1.0 - a_t;
        b_s = 1.0 - a_s;
    }
    if (s == t) {
        sc.on_prev = 1.0;
        sc.on_xT = a_t - a_s;
        sc.on_x0hat = b_t - b_s;
        sc.noise_std = 0.0;
        return sc;
    }
    const double contraction = (al_s * s2_t) / (al_t * s2_s);
    sc.on_prev = contraction;
    sc.on_xT = a_t - a_s * contraction;
    sc.on_x0hat = b_t - b_s * contraction;
    const double inner = 1.0 - (al_s * al_s * s2_t) / (al_t * al_t * s2_s);
    sc.noise_std = std::sqrt(std::max(0.0, s2_t * inner));
    return sc;
}

double time_of_beta(const Schedule& sched, double beta_value, bool inf_mode) {
    if (!inf_mode) return sched.t_of_beta(beta_value);
    const double lo = sched.beta_clamp_time();
    const double hi = sched.horizon();
    const double beta_hi = beta_mode(sched, lo, true);
    const double beta_lo = beta_mode(sched, hi, true);  // -inf in this mode
    if (beta_value >= beta_hi) return lo;
    if (beta_value <= beta_lo) return hi;
    double a = lo, b = hi;
    const double tol = 1e-12 * std::max(1.0, std::abs(beta_value));
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (a + b);
        const double bm = beta_mode(sched, mid, true);
        if (std::abs(bm - beta_value) <= tol) return mid;
        if (bm > beta_value) {
            a = mid;
        } else {
            b = mid;
        }
        if (b - a <= 1e-17 * sched.horizon()) break;
    }
    return 0.5 * (a + b);
}

double phi1(double h) {
    if (h == 0.0) return 1.0;
    return -std::expm1(-h) / h;
}

double b_of_h(BKind kind, double h) {
    return kind == BKind::linear ? h : std::expm1(h);
}

std::vector<double> corrector_coeffs(int k, double h, const std::vector<double>& r,
                                     BKind b_kind) {
    if (k < 1) throw std::invalid_argument("corrector: k must be >= 1");
    if (r.size() != static_cast<std::size_t>(k)) {
        throw std::invalid_argument("corrector: r sequence must have k entries");
    }
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw std::domain_error("corrector: h must be positive and finite");
    }
    // g_n = h^n n! phi_{n+1}(h) via the phi recursion.
    std::vector<double> g(static_cast<std::size_t>(k));
    double phi = phi1(h);    // phi_1
    double factorial = 1.0;  // n!
    double h_pow = 1.0;      // h^n
    for (int n = 1; n <= k; ++n) {
        factorial *= n;
        const double phi_next = (1.0 / factorial - phi) / h;  // phi_{n+1}
        h_pow *= h;
        g[static_cast<std::size_t>(n - 1)] = h_pow * factorial * phi_next;
        phi = phi_next;
    }
    std::vector<std::vector<double>> R(static_cast<std::size_t>(k),
                                       std::vector<double>(static_cast<std::size_t>(k)));
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            R[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                std::pow(r[static_cast<std::size_t>(j)] * h, i);
        }
    }
    const double b = b_of_h(b_kind, h);
    for (double& v : g) v /= b;
    return solve_dense(std::move(R), std::move(g));
}

std::vector<double> corrector_weights(int k, double h, const std::vector<double>& r) {
    if (k == 1) {
        // B(h) c_1(h) = g_1(h) = 1 - phi_1(h); well-defined as h -> infinity.
        return {1.0 - phi1(h)};
    }
    auto c = corrector_coeffs(k, h, r, BKind::linear);
    for (double& v : c) v *= h;
    return c;
}

TimeGrid TimeGrid::uniform(double horizon, int steps, double t_end) {
    if (steps < 1) throw std::invalid_argument("grid: need at least one step");
    if (!(t_end >= 0.0 && t_end < horizon)) {
        throw std::invalid_argument("grid: t_end must lie in [0, T)");
    }
    TimeGrid g;
    g.times.resize(static_cast<std::size_t>(steps) + 1);
    for (int i = 0; i <= steps; ++i) {
        g.times[static_cast<std::size_t>(i)] =
            horizon - (horizon - t_end) * static_cast<double>(i) / steps;
    }
    g.times.front() = horizon;
    g.times.back() = t_end;
    return g;
}

void TimeGrid::validate(double horizon) const {
    if (times.size() < 2) throw std::invalid_argument("grid: need at least one step");
    if (times.front() > horizon || times.back() < 0.0) {
        throw std::invalid_argument("grid: times outside [0, T]");
    }
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] < times[i - 1])) {
            throw std::invalid_argument("grid: times must strictly decrease");
        }
    }
}

StateVec unidbpp_step_1(const Schedule& sched, const PredictionModel& model,
                        const StateVec& x_s, const StateVec& xT, double s, double t,
                        Prng* rng, bool inf_mode) {
    require_same_dim(x_s, xT);
    const StepCoeffs sc = step_coeffs_mode(sched, s, t, inf_mode);
    const StateVec x0hat = model.predict_data(sched.coeffs(s), x_s, xT);
    return apply_step(sc, x_s, xT, x0hat, rng);
}

StateVec unidbpp_step_2_singlestep(const Schedule& sched, const PredictionModel& model,
                                   const StateVec& x_s, const StateVec& xT, double s, double t,
                                   double r, Prng* rng, bool inf_mode) {
    require_same_dim(x_s, xT);
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("samplers: r must lie in (0,1)");
    const StateVec x0hat_s = model.predict_data(sched.coeffs(s), x_s, xT);
    return step2_single_impl(sched, model, x_s, xT, s, t, r, rng, inf_mode, x0hat_s);
}

StateVec unidbpp_step_2_multistep(const Schedule& sched, const PredictionModel& model,
                                  const StateVec& x_s, const StateVec& xT, double s, double t,
                                  const MultistepHistory& history, Prng* rng, bool inf_mode) {
    require_same_dim(x_s, xT);
    if (history.x0hat_prev.empty()) {
        throw std::invalid_argument("samplers: multistep needs history past the first step");
    }
    const StateVec x0hat_s = model.predict_data(sched.coeffs(s), x_s, xT);
    return step2_multi_impl(sched, x_s, xT, s, t, history, rng, inf_mode, x0hat_s);
}

StateVec noise_param_step_1(const Schedule& sched, const PredictionModel& model,
                            const StateVec& x_s, const StateVec& xT, double s, double t,
                            Prng* rng, bool inf_mode) {
    require_same_dim(x_s, xT);
    if (!(s > t)) throw std::domain_error("samplers: step needs s > t");
    const StateVec eps = model.predict_noise(sched.coeffs(s), x_s, xT);
    return noise_fo_update(sched, x_s, xT, s, t, inf_mode, eps, rng);
}

CorrectedStep unidbpp_corrected_step(const Schedule& sched, const PredictionModel& model,
                                     const StateVec& xc_s, const StateVec& xT, double s,
                                     double t, const CorrectorOpts& opts, Prng* rng,
                                     bool inf_mode) {
    require_same_dim(xc_s, xT);
    const StepCoeffs sc = step_coeffs_mode(sched, s, t, inf_mode);
    const StateVec x0hat_c = model.predict_data(sched.coeffs(s), xc_s, xT);

    CorrectedStep result;
    result.predicted = apply_step(sc, xc_s, xT, x0hat_c, rng);

    const double beta_s = beta_mode(sched, s, inf_mode);
    const double beta_t = beta_mode(sched, t, inf_mode);
    const double h = beta_t - beta_s;
    const double kap_t = kappa_mode(sched, t, inf_mode);
    const double rho_T = sched.rho(sched.horizon());

    const StateVec x0hat_t = model.predict_data(sched.coeffs(t), result.predicted, xT);
    if (!std::isfinite(h) || !std::isfinite(beta_s)) {
        // Unbounded beta gap (final step to t = 0, or s = T in the Doob
        // limit): the corrected update would drop its prediction anchor, so
        // apply the plain first-order update.
        result.corrected = apply_step(sc, xc_s, xT, x0hat_c, rng);
        return result;
    }

    if (opts.k == 1) {
        const double w = corrector_weights(1, h, opts.r)[0];
        StateVec xc = lincomb({{sc.on_prev, &xc_s}, {sc.on_xT, &xT}});
        if (opts.form == CorrectorForm::display) {
            axpy(sc.on_x0hat, x0hat_c, xc);
        }
        const double corr = (kap_t / rho_T) * w;
        for (std::size_t i = 0; i < xc.size(); ++i) {
            xc[i] += corr * (x0hat_t[i] - x0hat_c[i]);
        }
        if (rng != nullptr && sc.noise_std > 0.0) {
            for (double& v : xc) v += sc.noise_std * rng->normal();
        }
        result.corrected = std::move(xc);
        return result;
    }

    // k >= 2: display-equation form with intermediate nodes; experimental.
    const auto weights = corrector_weights(opts.k, h, opts.r);
    StateVec xc = lincomb({{sc.on_prev, &xc_s}, {sc.on_xT, &xT}, {sc.on_x0hat, &x0hat_c}});
    for (int i = 0; i < opts.k; ++i) {
        const double r_i = opts.r[static_cast<std::size_t>(i)];
        StateVec x0hat_i;
        if (i == opts.k - 1) {
            x0hat_i = x0hat_t;
        } else {
            const double t_i = time_of_beta(sched, beta_s + r_i * h, inf_mode);
            const StepCoeffs sc_i = step_coeffs_mode(sched, s, t_i, inf_mode);
            const StateVec x_i = apply_step(sc_i, xc_s, xT, x0hat_c, rng);
            x0hat_i = model.predict_data(sched.coeffs(t_i), x_i, xT);
        }
        const double coeff = (kap_t / rho_T) * weights[static_cast<std::size_t>(i)] / r_i;
        for (std::size_t j = 0; j < xc.size(); ++j) {
            xc[j] += coeff * (x0hat_i[j] - x0hat_c[j]);
        }
    }
    if (rng != nullptr && sc.noise_std > 0.0) {
        for (double& v : xc) v += sc.noise_std * rng->normal();
    }
    result.corrected = std::move(xc);
    return result;
}

StateVec euler_drift(const Schedule& sched, const PredictionModel& model, double t,
                     const StateVec& x, const StateVec& xT,
                     Parameterization parameterization, bool inf_mode) {
    require_same_dim(x, xT);
    BridgeCoeffs c = sched.coeffs(t);
    const double igl = inf_mode ? 0.0 : sched.inv_gamma_lambda2();
    if (inf_mode) {
        // Forced Doob limit regardless of the schedule's gamma.
        const double p_t = -std::expm1(-2.0 * c.theta_bar_tT);
        const double p_0 = -std::expm1(-2.0 * sched.theta_bar_T());
        c.xi_t = std::exp(-c.theta_bar_t) * (p_t / p_0);
    }
    const double g2 = 2.0 * sched.lambda2() * c.theta_t;
    StateVec drift(x.size(), 0.0);

    // Controller prefactor; undefined only at t = T in the Doob limit,
    // where the controller term is skipped.
    const double denom_scaled = igl - std::expm1(-2.0 * c.theta_bar_tT);
    double k = c.theta_t;
    if (denom_scaled > 0.0) {
        k += g2 * std::exp(-2.0 * c.theta_bar_tT) / (sched.lambda2() * denom_scaled);
    }

    if (!(c.sigma_prime2_t > 0.0)) {
        // Singular node (t = T or t = 0): keep only the regular
        // mean-reverting and controller parts.
        for (std::size_t i = 0; i < x.size(); ++i) drift[i] = k * (xT[i] - x[i]);
        return drift;
    }

    if (parameterization == Parameterization::data) {
        const StateVec x0hat = model.predict_data(c, x, xT);
        const double big_g = g2 / c.sigma_prime2_t;
        for (std::size_t i = 0; i < x.size(); ++i) {
            drift[i] = (k - big_g) * (xT[i] - x[i]) + big_g * c.xi_t * (xT[i] - x0hat[i]);
        }
    } else {
        const StateVec eps = model.predict_noise(c, x, xT);
        const double score_coeff = g2 / std::sqrt(c.sigma_prime2_t);
        for (std::size_t i = 0; i < x.size(); ++i) {
            drift[i] = k * (xT[i] - x[i]) + score_coeff * eps[i];
        }
    }
    return drift;
}

StateVec euler_reverse(const Schedule& sched, const PredictionModel& model,
                       const StateVec& xT, const TimeGrid& grid, ProcessKind process,
                       Parameterization parameterization, Prng* rng, bool inf_mode) {
    grid.validate(sched.horizon());
    const auto& ts = grid.times;
    const int steps = grid.steps();
    StateVec x = xT;
    for (int i = 1; i <= steps; ++i) {
        const double s = ts[static_cast<std::size_t>(i - 1)];
        const double t = ts[static_cast<std::size_t>(i)];
        const StateVec drift = euler_drift(sched, model, s, x, xT, parameterization, inf_mode);
        axpy(t - s, drift, x);
        if (process == ProcessKind::sde && rng != nullptr && i < steps) {
            const double sd = std::sqrt(sched.g2(s)) * std::sqrt(s - t);
            if (sd > 0.0) {
                for (double& v : x) v += sd * rng->normal();
            }
        }
    }
    return x;
}

namespace {

SamplerResult run_unidbpp(const SamplerSpec& spec, const Schedule& sched,
                          const PredictionModel& model, const StateVec& xT, TimeGrid grid,
                          Prng& rng, bool record) {
    const bool inf_mode = spec.limit_mode == LimitMode::goub;
    const bool gamma_inf = inf_mode || sched.gamma_is_infinite();
    if (spec.parameterization == Parameterization::noise && gamma_inf &&
        grid.times.front() >= sched.horizon()) {
        grid.times.front() = sched.horizon() - sched.beta_clamp_time();
    }
    const bool sde = spec.process == ProcessKind::sde;
    const bool multistep = spec.order == 2 && spec.stepping == Stepping::multistep;
    const int steps = grid.steps();
    const auto& ts = grid.times;

    SamplerResult out;
    StateVec x = xT;
    StateVec xc = xT;  // corrected chain
    MultistepHistory history;
    double beta_prev_node =
        multistep ? beta_mode(sched, ts[0], inf_mode) : 0.0;
    if (record) {
        out.times.push_back(ts[0]);
        out.states.push_back(x);
    }

    const std::int64_t evals_before = model.eval_count();
    for (int i = 1; i <= steps; ++i) {
        const double s = ts[static_cast<std::size_t>(i - 1)];
        const double t = ts[static_cast<std::size_t>(i)];
        const bool final_step = i == steps;
        Prng* noise = (sde && !final_step) ? &rng : nullptr;

        if (spec.corrector.enabled) {
            CorrectedStep cs = unidbpp_corrected_step(sched, model, xc, xT, s, t,
                                                      spec.corrector, noise, inf_mode);
            x = std::move(cs.predicted);
            xc = std::move(cs.corrected);
        } else if (spec.parameterization == Parameterization::noise) {
            const StateVec eps_s = model.predict_noise(sched.coeffs(s), x, xT);
            if (spec.order == 1) {
                x = noise_fo_update(sched, x, xT, s, t, inf_mode, eps_s, noise);
            } else if (spec.stepping == Stepping::singlestep) {
                x = noise_step_2_single_impl(sched, model, x, xT, s, t, spec.singlestep_r,
                                             noise, inf_mode, eps_s);
            } else {
                if (history.x0hat_prev.empty()) {
                    switch (spec.bootstrap) {
                        case MultistepBootstrap::singlestep2:
                            x = noise_step_2_single_impl(sched, model, x, xT, s, t,
                                                         spec.singlestep_r, noise, inf_mode,
                                                         eps_s);
                            break;
                        case MultistepBootstrap::first_order:
                        case MultistepBootstrap::linear_only:
                            x = noise_fo_update(sched, x, xT, s, t, inf_mode, eps_s, noise);
                            break;
                    }
                } else {
                    x = noise_step_2_multi_impl(sched, x, xT, s, t, history, noise, inf_mode,
                                                eps_s);
                }
                history.x0hat_prev = eps_s;
            }
        } else if (spec.order == 1) {
            const StateVec x0hat_s = model.predict_data(sched.coeffs(s), x, xT);
            const StepCoeffs sc = step_coeffs_mode(sched, s, t, inf_mode);
            x = apply_step(sc, x, xT, x0hat_s, noise);
        } else if (spec.stepping == Stepping::singlestep) {
            const StateVec x0hat_s = model.predict_data(sched.coeffs(s), x, xT);
            x = step2_single_impl(sched, model, x, xT, s, t, spec.singlestep_r, noise,
                                  inf_mode, x0hat_s);
        } else {
            const StateVec x0hat_s = model.predict_data(sched.coeffs(s), x, xT);
            if (history.x0hat_prev.empty()) {
                switch (spec.bootstrap) {
                    case MultistepBootstrap::singlestep2:
                        x = step2_single_impl(sched, model, x, xT, s, t, spec.singlestep_r,
                                              noise, inf_mode, x0hat_s);
                        break;
                    case MultistepBootstrap::first_order: {
                        const StepCoeffs sc = step_coeffs_mode(sched, s, t, inf_mode);
                        x = apply_step(sc, x, xT, x0hat_s, noise);
                        break;
                    }
                    case MultistepBootstrap::linear_only: {
                        const StepCoeffs sc = step_coeffs_mode(sched, s, t, inf_mode);
                        StateVec next = lincomb({{sc.on_prev, &x}, {sc.on_xT, &xT}});
                        if (noise != nullptr && sc.noise_std > 0.0) {
                            for (double& v : next) v += sc.noise_std * noise->normal();
                        }
                        x = std::move(next);
                        break;
                    }
                }
            } else {
                x = step2_multi_impl(sched, x, xT, s, t, history, noise, inf_mode, x0hat_s);
            }
            history.x0hat_prev = x0hat_s;
        }

        if (multistep) {
            const double beta_node = beta_mode(sched, t, inf_mode);
            history.h_prev = beta_node - beta_prev_node;
            beta_prev_node = beta_node;
        }
        if (record) {
            out.times.push_back(t);
            out.states.push_back(spec.corrector.enabled ? xc : x);
        }
    }
    out.terminal = spec.corrector.enabled ? xc : x;
    out.nfe = model.eval_count() - evals_before;
    return out;
}

}  // namespace

SamplerResult run_sampler(const SamplerSpec& spec, const Schedule& sched,
                          const PredictionModel& model, const StateVec& xT,
                          const TimeGrid& grid, Prng& rng, bool record) {
    spec.validate();
    grid.validate(sched.horizon());
    if (spec.limit_mode != LimitMode::unidb && spec.limit_mode != LimitMode::goub) {
        throw std::invalid_argument(
            "sampler: only unidb and goub modes are runnable; the DBIM modes are "
            "coefficient providers");
    }
    if (spec.family == SamplerFamily::euler) {
        SamplerResult out;
        const std::int64_t evals_before = model.eval_count();
        out.terminal =
            euler_reverse(sched, model, xT, grid, spec.process, spec.parameterization,
                          spec.process == ProcessKind::sde ? &rng : nullptr,
                          spec.limit_mode == LimitMode::goub);
        out.nfe = model.eval_count() - evals_before;
        return out;
    }
    return run_unidbpp(spec, sched, model, xT, grid, rng, record);
}

StateVec mean_ode_solver(const Schedule& sched, const PredictionModel& model,
                         const StateVec& xT, const TimeGrid& grid, bool inf_mode) {
    SamplerSpec spec;
    spec.family = SamplerFamily::unidbpp;
    spec.process = ProcessKind::mean_ode;
    spec.order = 1;
    spec.limit_mode = inf_mode ? LimitMode::goub : LimitMode::unidb;
    Prng unused(0, "mean-ode");
    return run_sampler(spec, sched, model, xT, grid, unused).terminal;
}

}  // namespace unidb
