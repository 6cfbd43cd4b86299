#pragma once

#include <atomic>
#include <cstdint>
#include <memory>

#include "unidb/schedule.hpp"
#include "unidb/state.hpp"

namespace unidb {

// Conversion between data and noise parameterizations of the same model:
// x_t = xi_t x0 + (1 - xi_t) xT + sigma'_t eps.
StateVec data_from_noise(const BridgeCoeffs& c, const StateVec& x_t, const StateVec& xT,
                         const StateVec& eps);
StateVec noise_from_data(const BridgeCoeffs& c, const StateVec& x_t, const StateVec& xT,
                         const StateVec& x0hat);

// Prediction-model abstraction. A model is natural in one parameterization;
// the other is obtained through the conversion above. Every predict call
// (either direction) counts one function evaluation, which is what solvers
// report as NFE.
class PredictionModel {
public:
    virtual ~PredictionModel() = default;

    StateVec predict_data(const BridgeCoeffs& c, const StateVec& x_t, const StateVec& xT) const {
        ++evals_;
        return data_impl(c, x_t, xT);
    }
    StateVec predict_noise(const BridgeCoeffs& c, const StateVec& x_t, const StateVec& xT) const {
        ++evals_;
        return noise_impl(c, x_t, xT);
    }

    std::int64_t eval_count() const { return evals_.load(); }
    void reset_eval_count() const { evals_.store(0); }

protected:
    virtual StateVec data_impl(const BridgeCoeffs& c, const StateVec& x_t,
                               const StateVec& xT) const = 0;
    virtual StateVec noise_impl(const BridgeCoeffs& c, const StateVec& x_t,
                                const StateVec& xT) const {
        return noise_from_data(c, x_t, xT, data_impl(c, x_t, xT));
    }

private:
    mutable std::atomic<std::int64_t> evals_{0};
};

enum class OracleKind { point_mass, gaussian_prior, constant, affine_in_beta, constant_noise };

// Analytic models standing in for a trained network at desk scale.
struct OracleSpec {
    OracleKind kind = OracleKind::point_mass;
    StateVec x0_star;       // point_mass
    double m0 = 0.0;        // gaussian_prior mean
    double s0_sq = 1.0;     // gaussian_prior variance, > 0
    StateVec constant;      // constant data prediction
    double affine_a = 0.0;  // affine_in_beta: a + b * beta_t per coordinate
    double affine_b = 0.0;
    std::size_t dim = 1;    // dimension for scalar-specified oracles
    StateVec eps_constant;  // constant_noise: fixed noise prediction
};

// Posterior mean E[x0 | x_t, xT] under an N(m0, s0_sq) prior per coordinate
// and the bridge transition likelihood.
StateVec ideal_gaussian_denoiser(double m0, double s0_sq, const BridgeCoeffs& c,
                                 const StateVec& x_t, const StateVec& xT);

std::unique_ptr<PredictionModel> make_oracle(const OracleSpec& spec);

// Analytic posterior-mean target the harness scores runs against.
StateVec oracle_target(const OracleSpec& spec, const Schedule& sched);

}  // namespace unidb
