#include "unidb/models.hpp"

#include <cmath>
#include <stdexcept>

namespace unidb {

StateVec data_from_noise(const BridgeCoeffs& c, const StateVec& x_t, const StateVec& xT,
                         const StateVec& eps) {
    require_same_dim(x_t, xT);
    require_same_dim(x_t, eps);
    if (!(c.xi_t > 0.0)) {
        throw std::domain_error("models: xi_t = 0, data prediction is unrecoverable");
    }
    const double sp = std::sqrt(c.sigma_prime2_t);
    StateVec out(x_t.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (x_t[i] - (1.0 - c.xi_t) * xT[i] - sp * eps[i]) / c.xi_t;
    }
    return out;
}

StateVec noise_from_data(const BridgeCoeffs& c, const StateVec& x_t, const StateVec& xT,
                         const StateVec& x0hat) {
    require_same_dim(x_t, xT);
    require_same_dim(x_t, x0hat);
    if (!(c.sigma_prime2_t > 0.0)) {
        throw std::domain_error("models: sigma'_t = 0, noise prediction is unrecoverable");
    }
    const double sp = std::sqrt(c.sigma_prime2_t);
    StateVec out(x_t.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (x_t[i] - (1.0 - c.xi_t) * xT[i] - c.xi_t * x0hat[i]) / sp;
    }
    return out;
}

StateVec ideal_gaussian_denoiser(double m0, double s0_sq, const BridgeCoeffs& c,
                                 const StateVec& x_t, const StateVec& xT) {
    require_same_dim(x_t, xT);
    if (!(s0_sq > 0.0)) throw std::invalid_argument("models: prior variance must be > 0");
    const double denom = c.xi_t * c.xi_t * s0_sq + c.sigma_prime2_t;
    StateVec out(x_t.size());
    if (denom == 0.0) {
        // xi = sigma' = 0 happens only at t = T in the Doob limit. The
        // finite-gamma formula evaluated at the pinned state gives x_t
        // there, so return the state to keep the gamma limit continuous.
        return x_t;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double residual = x_t[i] - (1.0 - c.xi_t) * xT[i];
        out[i] = (c.xi_t * s0_sq * residual + c.sigma_prime2_t * m0) / denom;
    }
    return out;
}

namespace {

class PointMassOracle final : public PredictionModel {
public:
    explicit PointMassOracle(StateVec x0) : x0_(std::move(x0)) {}

protected:
    StateVec data_impl(const BridgeCoeffs&, const StateVec&, const StateVec&) const override {
        return x0_;
    }

private:
    StateVec x0_;
};

class GaussianPriorOracle final : public PredictionModel {
public:
    GaussianPriorOracle(double m0, double s0_sq) : m0_(m0), s0_sq_(s0_sq) {
        if (!(s0_sq_ > 0.0)) throw std::invalid_argument("models: prior variance must be > 0");
    }

protected:
    StateVec data_impl(const BridgeCoeffs& c, const StateVec& x_t,
                       const StateVec& xT) const override {
        return ideal_gaussian_denoiser(m0_, s0_sq_, c, x_t, xT);
    }

    // Exact conditional noise; unlike the generic conversion it stays
    // defined at sigma' = 0, where it vanishes.
    StateVec noise_impl(const BridgeCoeffs& c, const StateVec& x_t,
                        const StateVec& xT) const override {
        require_same_dim(x_t, xT);
        const double denom = c.xi_t * c.xi_t * s0_sq_ + c.sigma_prime2_t;
        StateVec out(x_t.size(), 0.0);
        if (denom == 0.0) return out;
        const double sp = std::sqrt(c.sigma_prime2_t);
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = sp * (x_t[i] - c.xi_t * m0_ - (1.0 - c.xi_t) * xT[i]) / denom;
        }
        return out;
    }

private:
    double m0_;
    double s0_sq_;
};

class ConstantOracle final : public PredictionModel {
public:
    explicit ConstantOracle(StateVec value) : value_(std::move(value)) {}

protected:
    StateVec data_impl(const BridgeCoeffs&, const StateVec&, const StateVec&) const override {
        return value_;
    }

private:
    StateVec value_;
};

// Synthetic model used by the second-order exactness tests: the prediction
// is affine in beta and ignores the state entirely.
class AffineInBetaOracle final : public PredictionModel {
public:
    AffineInBetaOracle(double a, double b, std::size_t dim) : a_(a), b_(b), dim_(dim) {}

protected:
    StateVec data_impl(const BridgeCoeffs& c, const StateVec&, const StateVec&) const override {
        if (!std::isfinite(c.beta_t)) {
            throw std::domain_error("models: affine-in-beta oracle needs a finite beta");
        }
        return StateVec(dim_, a_ + b_ * c.beta_t);
    }

private:
    double a_;
    double b_;
    std::size_t dim_;
};

class ConstantNoiseOracle final : public PredictionModel {
public:
    explicit ConstantNoiseOracle(StateVec eps) : eps_(std::move(eps)) {}

protected:
    StateVec data_impl(const BridgeCoeffs& c, const StateVec& x_t,
                       const StateVec& xT) const override {
        return data_from_noise(c, x_t, xT, eps_);
    }
    StateVec noise_impl(const BridgeCoeffs&, const StateVec&, const StateVec&) const override {
        return eps_;
    }

private:
    StateVec eps_;
};

}  // namespace

std::unique_ptr<PredictionModel> make_oracle(const OracleSpec& spec) {
    switch (spec.kind) {
        case OracleKind::point_mass:
            return std::make_unique<PointMassOracle>(spec.x0_star);
        case OracleKind::gaussian_prior:
            return std::make_unique<GaussianPriorOracle>(spec.m0, spec.s0_sq);
        case OracleKind::constant:
            return std::make_unique<ConstantOracle>(spec.constant);
        case OracleKind::affine_in_beta:
            return std::make_unique<AffineInBetaOracle>(spec.affine_a, spec.affine_b, spec.dim);
        case OracleKind::constant_noise:
            return std::make_unique<ConstantNoiseOracle>(spec.eps_constant);
    }
    throw std::invalid_argument("models: unknown oracle kind");
}

StateVec oracle_target(const OracleSpec& spec, const Schedule& sched) {
    switch (spec.kind) {
        case OracleKind::point_mass:
            return spec.x0_star;
        case OracleKind::gaussian_prior:
            // The prior carries no terminal coupling, so the posterior mean
            // given xT alone is the prior mean.
            return StateVec(spec.dim, spec.m0);
        case OracleKind::constant:
            return spec.constant;
        case OracleKind::affine_in_beta:
            return StateVec(spec.dim,
                            spec.affine_a + spec.affine_b *
                                                sched.coeffs(sched.beta_clamp_time()).beta_t);
        case OracleKind::constant_noise:
            throw std::invalid_argument("models: constant-noise oracle has no scalar target");
    }
    throw std::invalid_argument("models: unknown oracle kind");
}

}  // namespace unidb
