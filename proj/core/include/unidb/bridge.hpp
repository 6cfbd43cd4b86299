#pragma once

#include <vector>

#include "unidb/rng.hpp"
#include "unidb/schedule.hpp"
#include "unidb/state.hpp"

namespace unidb {

// Gaussian transition law x_t | x_0, x_T with isotropic variance.
struct TransitionLaw {
    StateVec mean;
    double var = 0.0;
};

// mean = xi_t x_0 + (1 - xi_t) x_T, var = sigma_prime2_t.
TransitionLaw transition_law(const BridgeCoeffs& c, const StateVec& x0, const StateVec& xT);

// mean + sqrt(var) z, z standard normal per coordinate. Draws nothing when
// var == 0 so the degenerate endpoints stay exact.
StateVec sample_transition(const BridgeCoeffs& c, const StateVec& x0, const StateVec& xT,
                           Prng& rng);

// Optimal controller u* = g_t e^{-2 theta_bar_{t:T}} / (1/gamma + sigma2_{t:T}) (xT - x).
// Excluded time: t = T with infinite gamma (0/0 prefactor).
StateVec optimal_control(const Schedule& sched, double t, const StateVec& x,
                         const StateVec& xT);

struct ForwardPath {
    std::vector<double> times;
    std::vector<StateVec> states;
};

// Euler-Maruyama integrator for the controlled forward process on a uniform
// grid from 0 to T. Node coefficients are precomputed once so that many
// paths can be simulated cheaply against the same grid. With infinite gamma
// the controller diverges at T, so the final node is capped at T - clamp.
class ForwardSimulator {
public:
    ForwardSimulator(const Schedule& sched, int n_steps);

    const std::vector<double>& times() const { return times_; }
    int n_steps() const { return static_cast<int>(nodes_.size()); }

    // Advance one path from x0 through `upto` steps (all steps if upto < 0).
    StateVec simulate(const StateVec& x0, const StateVec& xT, Prng& rng,
                      bool with_noise = true, int upto = -1) const;

    // Apply step i in place.
    void step(int i, StateVec& x, const StateVec& xT, Prng& rng, bool with_noise) const;

private:
    struct Node {
        double dt;
        double reversion;  // theta_t + g_t * control prefactor
        double noise_sd;   // g_t sqrt(dt)
    };
    std::vector<Node> nodes_;
    std::vector<double> times_;
};

// Full-trajectory convenience wrapper used by the validation suite.
ForwardPath forward_euler(const Schedule& sched, const StateVec& x0, const StateVec& xT,
                          int n_steps, Prng& rng, bool with_noise = true);

}  // namespace unidb
