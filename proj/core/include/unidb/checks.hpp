#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unidb/schedule.hpp"

namespace unidb {

struct CheckResult {
    std::string name;
    bool passed = false;
    double metric = 0.0;  // the quantity compared against the bound
    double bound = 0.0;
    std::string detail;
};

struct ValidationConfig {
    ScheduleParams schedule;
    int samples = 2000;
    std::uint64_t seed = 0;
};

// Named invariant checks: partition of unity, noise-variance semigroup,
// conversion and beta roundtrips, beta monotonicity, the infinite-gamma
// limit ladder, the small-theta recovery ladder and the
// variance-preserving identities. `filter` keeps checks whose name
// contains it.
std::vector<CheckResult> run_validation_suite(const ValidationConfig& config,
                                              const std::string& filter = "");

// Max unit-scaled step-coefficient difference between the finite-gamma and
// the exact infinite-gamma provider over an (s,t) grid, one entry per
// gamma rung.
std::vector<double> goub_limit_ladder(ScheduleParams params, const std::vector<double>& gammas,
                                      int grid_n);

// Max unit-scaled difference across the four coefficient pairs between the
// near-Doob sampler coefficients and the variance-exploding provider, one
// entry per constant-rate rung (small rates recover the provider exactly).
std::vector<double> dbim_ve_recovery_ladder(const std::vector<double>& theta_rates,
                                            double gamma, int grid_n);

// Max unit-scaled error across the four variance-preserving identities at
// random (s,t); exact for lambda^2 = 1 in the Doob limit.
double dbim_vp_identity_max_error(ScheduleParams params, int samples, std::uint64_t seed);

}  // namespace unidb
