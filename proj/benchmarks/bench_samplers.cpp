#include <benchmark/benchmark.h>

#include "unidb/bridge.hpp"
#include "unidb/models.hpp"
#include "unidb/samplers.hpp"
#include "unidb/schedule.hpp"

using namespace unidb;

namespace {

struct Fixture {
    Schedule sched;
    std::unique_ptr<PredictionModel> model;
    StateVec xT;

    Fixture() : sched(make_params()), xT{1.0} {
        OracleSpec spec;
        spec.kind = OracleKind::gaussian_prior;
        spec.m0 = 0.0;
        spec.s0_sq = 0.04;
        model = make_oracle(spec);
    }

    static ScheduleParams make_params() {
        ScheduleParams p;
        p.kind = ScheduleKind::flipped_cosine;
        p.gamma = 1e8;
        return p;
    }
};

void BM_StepCoeffs(benchmark::State& state) {
    const Fixture f;
    for (auto _ : state) {
        benchmark::DoNotOptimize(step_coeffs(f.sched, 0.6, 0.3));
    }
}
BENCHMARK(BM_StepCoeffs);

void BM_SamplerRun(benchmark::State& state) {
    const Fixture f;
    const int steps = static_cast<int>(state.range(0));
    SamplerSpec ss;
    ss.process = ProcessKind::sde;
    const TimeGrid grid = TimeGrid::uniform(1.0, steps);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        Prng rng(seed++, "bench");
        benchmark::DoNotOptimize(run_sampler(ss, f.sched, *f.model, f.xT, grid, rng));
    }
}
BENCHMARK(BM_SamplerRun)->Arg(5)->Arg(20)->Arg(100);

void BM_CorrectedRun(benchmark::State& state) {
    const Fixture f;
    SamplerSpec ss;
    ss.process = ProcessKind::sde;
    ss.corrector.enabled = true;
    const TimeGrid grid = TimeGrid::uniform(1.0, 8);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        Prng rng(seed++, "bench-corr");
        benchmark::DoNotOptimize(run_sampler(ss, f.sched, *f.model, f.xT, grid, rng));
    }
}
BENCHMARK(BM_CorrectedRun);

void BM_ForwardPathStep(benchmark::State& state) {
    const Fixture f;
    const ForwardSimulator sim(f.sched, 2000);
    const StateVec x0{0.0};
    Prng rng(7, "bench-fwd");
    for (auto _ : state) {
        benchmark::DoNotOptimize(sim.simulate(x0, f.xT, rng));
    }
}
BENCHMARK(BM_ForwardPathStep);

}  // namespace
