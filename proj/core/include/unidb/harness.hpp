#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "unidb/models.hpp"
#include "unidb/samplers.hpp"
#include "unidb/schedule.hpp"

namespace unidb {

// Seeded experiment over samplers x NFE x seeds on a toy bridge problem.
struct ExperimentSpec {
    ScheduleParams schedule;
    OracleSpec oracle;
    std::size_t dim = 1;
    double xT_value = 1.0;  // terminal state fill value
    std::vector<SamplerSpec> samplers;
    std::vector<int> nfe{5, 10, 20, 25, 50, 100};
    int seeds = 1;
    std::uint64_t master_seed = 0;
    int reference_steps = 100000;  // fine-grid M for reference solutions
};

struct RunResult {
    std::string sampler;
    std::string process;     // "sde" | "mean_ode"
    int order = 1;
    bool corrector = false;
    std::string gamma_mode;  // formatted gamma, "inf", or the limit-mode name
    int nfe = 0;             // requested step count
    int seed = 0;
    StateVec terminal;
    double rmse = 0.0;       // against the analytic posterior-mean target
    double wall_ms = 0.0;
    std::int64_t evals = 0;  // measured model evaluations
    std::string error;       // nonempty when the run failed; rmse is NaN then
};

// Cartesian product of samplers x NFE values x seeds; deterministic given
// the master seed, independent of execution order. Per-run failures are
// recorded, not thrown.
std::vector<RunResult> run_experiment(const ExperimentSpec& spec);

// Least-squares slope of log(error) vs log(1/M); needs at least three pairs.
double convergence_order(const std::vector<std::pair<double, double>>& m_and_error);

// CSV with header sampler,process,order,corrector,gamma_mode,nfe,seed,rmse,
// wall_ms,evals; UTF-8, LF endings, '.' decimal separator. Wall times are
// written as 0 unless with_timings is set, keeping the bytes deterministic.
void write_results_csv(const std::vector<RunResult>& results, const std::string& path,
                       bool with_timings = false);
void write_results_json(const std::vector<RunResult>& results, const std::string& path,
                        bool with_timings = false);

// Parses a file written by write_results_csv (terminal states are not part
// of the CSV and come back empty).
std::vector<RunResult> read_results_csv(const std::string& path);

std::string format_double(double value);  // shortest round-trip decimal form

}  // namespace unidb
