#pragma once

#include <optional>
#include <string>
#include <vector>

#include "unidb/models.hpp"
#include "unidb/rng.hpp"
#include "unidb/schedule.hpp"
#include "unidb/state.hpp"

namespace unidb {

enum class SamplerFamily { euler, unidbpp };
enum class ProcessKind { sde, mean_ode };
enum class Parameterization { data, noise };
enum class Stepping { singlestep, multistep };

// Coefficient provider selector. unidb uses the schedule's gamma; goub is
// the exact infinite-gamma limit; the remaining modes are comparison
// coefficient providers, not runnable samplers.
enum class LimitMode { unidb, goub, dbim_ve, dbim_vp, unidb_ve, unidb_vp };

// B(h) choice for the corrector; any O(h) function is admissible and the
// product B(h) c_i(h) used in the update does not depend on it.
enum class BKind { linear, expm1 };

// Corrected update form. `algorithm` drops the data-prediction anchor from
// the corrected state update (the published sampling routine's form);
// `display` keeps the full first-order step and adds the correction on top.
enum class CorrectorForm { algorithm, display };

// First multistep step policy. `singlestep2` bootstraps with the
// second-order singlestep rule (keeps the affine-in-beta exactness of the
// rule); `first_order` does a plain first-order step; `linear_only` applies
// only the linear part and records the prediction for history.
enum class MultistepBootstrap { singlestep2, first_order, linear_only };

struct CorrectorOpts {
    bool enabled = false;
    int k = 1;  // only k = 1 is normative; k > 1 is experimental
    std::vector<double> r{1.0};
    BKind b_kind = BKind::linear;
    CorrectorForm form = CorrectorForm::algorithm;
};

struct SamplerSpec {
    SamplerFamily family = SamplerFamily::unidbpp;
    ProcessKind process = ProcessKind::sde;
    Parameterization parameterization = Parameterization::data;
    int order = 1;
    Stepping stepping = Stepping::singlestep;
    double singlestep_r = 0.5;
    MultistepBootstrap bootstrap = MultistepBootstrap::singlestep2;
    CorrectorOpts corrector;
    LimitMode limit_mode = LimitMode::unidb;

    void validate() const;
    std::string id() const;
};

// Inverse of SamplerSpec::id(); throws std::invalid_argument on an unknown
// name.
SamplerSpec parse_sampler_id(const std::string& name);

// First-order exponential-integrator step coefficients in kappa/rho form
// (e^beta is never materialized, so t = 0 is exact).
struct StepCoeffs {
    double on_prev = 0.0;
    double on_xT = 0.0;
    double on_x0hat = 0.0;
    double noise_std = 0.0;
};

// Coefficients with the schedule's gamma (LimitMode::unidb).
StepCoeffs step_coeffs(const Schedule& sched, double s, double t);
// Coefficient provider for any variant mode.
StepCoeffs limit_coeffs(LimitMode mode, const Schedule& sched, double s, double t);

// Inverse of beta under a forced infinite-gamma mode (used by the GOUB
// sampler); inf_mode = false matches Schedule::t_of_beta.
double time_of_beta(const Schedule& sched, double beta_value, bool inf_mode);

// phi_1(h) = (1 - e^{-h}) / h.
double phi1(double h);
double b_of_h(BKind kind, double h);
// Solves R_k(h) c = g_k(h) / B(h) with R_k(h) = [(r_j h)^{i-1}] and
// g_n = h^n n! phi_{n+1}(h). Throws on duplicate r values.
std::vector<double> corrector_coeffs(int k, double h, const std::vector<double>& r, BKind b_kind);
// B(h) c_i(h); well-defined for k = 1 even as h -> infinity.
std::vector<double> corrector_weights(int k, double h, const std::vector<double>& r);

// Strictly decreasing times from T to t_end (default 0).
struct TimeGrid {
    std::vector<double> times;

    static TimeGrid uniform(double horizon, int steps, double t_end = 0.0);
    int steps() const { return static_cast<int>(times.size()) - 1; }
    void validate(double horizon) const;
};

// ---- single-step primitives (rng == nullptr drops the noise term) ----

StateVec unidbpp_step_1(const Schedule& sched, const PredictionModel& model,
                        const StateVec& x_s, const StateVec& xT, double s, double t,
                        Prng* rng, bool inf_mode = false);

StateVec unidbpp_step_2_singlestep(const Schedule& sched, const PredictionModel& model,
                                   const StateVec& x_s, const StateVec& xT, double s, double t,
                                   double r, Prng* rng, bool inf_mode = false);

// history = data prediction at the grid node before s and the beta step
// between those nodes.
struct MultistepHistory {
    StateVec x0hat_prev;
    double h_prev = 0.0;
};

StateVec unidbpp_step_2_multistep(const Schedule& sched, const PredictionModel& model,
                                  const StateVec& x_s, const StateVec& xT, double s, double t,
                                  const MultistepHistory& history, Prng* rng,
                                  bool inf_mode = false);

StateVec noise_param_step_1(const Schedule& sched, const PredictionModel& model,
                            const StateVec& x_s, const StateVec& xT, double s, double t,
                            Prng* rng, bool inf_mode = false);

struct CorrectedStep {
    StateVec predicted;  // x_t
    StateVec corrected;  // xc_t
};

CorrectedStep unidbpp_corrected_step(const Schedule& sched, const PredictionModel& model,
                                     const StateVec& xc_s, const StateVec& xT, double s,
                                     double t, const CorrectorOpts& opts, Prng* rng,
                                     bool inf_mode = false);

// ---- whole-trajectory drivers ----

struct SamplerResult {
    StateVec terminal;
    std::int64_t nfe = 0;
    std::vector<double> times;       // filled when record = true
    std::vector<StateVec> states;    // filled when record = true
};

SamplerResult run_sampler(const SamplerSpec& spec, const Schedule& sched,
                          const PredictionModel& model, const StateVec& xT,
                          const TimeGrid& grid, Prng& rng, bool record = false);

// Deterministic exact-solution solver (all noise terms zero).
StateVec mean_ode_solver(const Schedule& sched, const PredictionModel& model,
                         const StateVec& xT, const TimeGrid& grid, bool inf_mode = false);

// Euler(-Maruyama) discretization of the reverse process; the baseline.
StateVec euler_reverse(const Schedule& sched, const PredictionModel& model,
                       const StateVec& xT, const TimeGrid& grid, ProcessKind process,
                       Parameterization parameterization, Prng* rng, bool inf_mode = false);

// Drift of the reverse process at (t, x); exposed for the parameterization
// equivalence checks. Singular model/control terms are skipped at nodes
// where sigma'_t = 0.
StateVec euler_drift(const Schedule& sched, const PredictionModel& model, double t,
                     const StateVec& x, const StateVec& xT, Parameterization parameterization,
                     bool inf_mode = false);

}  // namespace unidb
