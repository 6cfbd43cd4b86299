#include <benchmark/benchmark.h>

#include "unidb/schedule.hpp"

using namespace unidb;

namespace {

Schedule make_flipped() {
    ScheduleParams p;
    p.kind = ScheduleKind::flipped_cosine;
    p.gamma = 100.0;
    return Schedule(p);
}

void BM_ScheduleConstruction(benchmark::State& state) {
    ScheduleParams p;
    p.kind = ScheduleKind::flipped_cosine;
    p.gamma = 100.0;
    for (auto _ : state) {
        Schedule sched(p);
        benchmark::DoNotOptimize(sched.theta_bar_T());
    }
}
BENCHMARK(BM_ScheduleConstruction);

void BM_ThetaBar(benchmark::State& state) {
    const Schedule sched = make_flipped();
    double t = 0.1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sched.theta_bar(0.0, t));
        t += 1e-7;
        if (t > 0.9) t = 0.1;
    }
}
BENCHMARK(BM_ThetaBar);

void BM_Coeffs(benchmark::State& state) {
    const Schedule sched = make_flipped();
    double t = 0.1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sched.coeffs(t));
        t += 1e-7;
        if (t > 0.9) t = 0.1;
    }
}
BENCHMARK(BM_Coeffs);

void BM_TimeOfBeta(benchmark::State& state) {
    const Schedule sched = make_flipped();
    const double beta = sched.coeffs(0.37).beta_t;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sched.t_of_beta(beta));
    }
}
BENCHMARK(BM_TimeOfBeta);

}  // namespace

BENCHMARK_MAIN();
