#include "unidb/bridge.hpp"

#include <cmath>
#include <stdexcept>

namespace unidb {

TransitionLaw transition_law(const BridgeCoeffs& c, const StateVec& x0, const StateVec& xT) {
    require_same_dim(x0, xT);
    TransitionLaw law;
    law.mean = lincomb({{c.xi_t, &x0}, {1.0 - c.xi_t, &xT}});
    law.var = c.sigma_prime2_t;
    return law;
}

StateVec sample_transition(const BridgeCoeffs& c, const StateVec& x0, const StateVec& xT,
                           Prng& rng) {
    TransitionLaw law = transition_law(c, x0, xT);
    if (law.var > 0.0) {
        const double sd = std::sqrt(law.var);
        for (double& v : law.mean) v += sd * rng.normal();
    }
    return law.mean;
}

namespace {

// Scalar prefactor of the controller at time t, or a domain error at the
// excluded time.
double control_prefactor(const Schedule& sched, double t) {
    const double tbT = sched.theta_bar(t, sched.horizon());
    // (1/gamma + sigma2_{t:T}) / lambda^2
    const double denom_scaled = sched.inv_gamma_lambda2() - std::expm1(-2.0 * tbT);
    if (denom_scaled <= 0.0) {
        throw std::domain_error("bridge: controller undefined at t = T with infinite gamma");
    }
    const double g = std::sqrt(sched.g2(t));
    return g * std::exp(-2.0 * tbT) / (sched.lambda2() * denom_scaled);
}

}  // namespace

StateVec optimal_control(const Schedule& sched, double t, const StateVec& x,
                         const StateVec& xT) {
    require_same_dim(x, xT);
    const double pref = control_prefactor(sched, t);
    StateVec u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) u[i] = pref * (xT[i] - x[i]);
    return u;
}

ForwardSimulator::ForwardSimulator(const Schedule& sched, int n_steps) {
    if (n_steps < 1) throw std::invalid_argument("bridge: n_steps must be >= 1");
    const double T = sched.horizon();
    const double t_end = sched.gamma_is_infinite() ? T - sched.beta_clamp_time() : T;
    nodes_.resize(static_cast<std::size_t>(n_steps));
    times_.resize(static_cast<std::size_t>(n_steps) + 1);
    times_[0] = 0.0;
    for (int i = 0; i < n_steps; ++i) {
        const double t = t_end * i / n_steps;
        const double t_next = t_end * (i + 1) / n_steps;
        const double g = std::sqrt(sched.g2(t));
        Node& node = nodes_[static_cast<std::size_t>(i)];
        node.dt = t_next - t;
        node.reversion = sched.theta(t) + g * control_prefactor(sched, t);
        node.noise_sd = g * std::sqrt(node.dt);
        times_[static_cast<std::size_t>(i) + 1] = t_next;
    }
}

void ForwardSimulator::step(int i, StateVec& x, const StateVec& xT, Prng& rng,
                            bool with_noise) const {
    const Node& node = nodes_.at(static_cast<std::size_t>(i));
    for (std::size_t k = 0; k < x.size(); ++k) {
        x[k] += node.reversion * (xT[k] - x[k]) * node.dt;
        if (with_noise) x[k] += node.noise_sd * rng.normal();
    }
}

StateVec ForwardSimulator::simulate(const StateVec& x0, const StateVec& xT, Prng& rng,
                                    bool with_noise, int upto) const {
    require_same_dim(x0, xT);
    const int last = upto < 0 ? n_steps() : upto;
    if (last < 0 || last > n_steps()) {
        throw std::invalid_argument("bridge: step index out of range");
    }
    StateVec x = x0;
    for (int i = 0; i < last; ++i) step(i, x, xT, rng, with_noise);
    return x;
}

ForwardPath forward_euler(const Schedule& sched, const StateVec& x0, const StateVec& xT,
                          int n_steps, Prng& rng, bool with_noise) {
    require_same_dim(x0, xT);
    ForwardSimulator sim(sched, n_steps);
    ForwardPath path;
    path.times = sim.times();
    path.states.reserve(path.times.size());
    path.states.push_back(x0);
    StateVec x = x0;
    for (int i = 0; i < n_steps; ++i) {
        sim.step(i, x, xT, rng, with_noise);
        path.states.push_back(x);
    }
    return path;
}

}  // namespace unidb
