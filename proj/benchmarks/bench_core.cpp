#include <cbc/classifier.hpp>
#include <cbc/eigensolver.hpp>
#include <cbc/montecarlo.hpp>
#include <cbc/simulator.hpp>

#include <benchmark/benchmark.h>

using namespace cbc;

namespace {

void BM_MechanismEvalStable(benchmark::State& state) {
    const Mechanism m(MechanismKind::Branching, 0.5, -1.0, StableJumps{1.5, 1.0});
    double x = 0.5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(m.eval(x));
        x = x < 100 ? x * 1.01 : 0.5;
    }
}
BENCHMARK(BM_MechanismEvalStable);

void BM_Classify(benchmark::State& state) {
    const CbcModel m = power_model(1.0, 1.5, 1.0, 0.75);
    for (auto _ : state) benchmark::DoNotOptimize(classify(m));
}
BENCHMARK(BM_Classify)->Unit(benchmark::kMillisecond);

void BM_StationaryLaplace(benchmark::State& state) {
    const auto v = stationary_verdict(verhulst_model(1, 1, 1));
    double x = 0.1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(v.law->laplace(x));
        x = x < 10 ? x + 0.1 : 0.1;
    }
}
BENCHMARK(BM_StationaryLaplace)->Unit(benchmark::kMicrosecond);

void BM_EigenSolve(benchmark::State& state) {
    const CbcModel m = gbm_model(2.0, 1.0);
    for (auto _ : state) {
        const EigenSolver es(m);
        benchmark::DoNotOptimize(es.fpt_laplace(1.0, 2.0, 1.0));
    }
}
BENCHMARK(BM_EigenSolve)->Unit(benchmark::kMillisecond);

// One path to t = 1 per iteration; dt from the argument (in 1e-4 units).
void BM_SimulatePath(benchmark::State& state) {
    const CbcModel m = verhulst_model(1, 1, 1);
    SimConfig cfg;
    cfg.dt = static_cast<double>(state.range(0)) * 1e-4;
    std::uint64_t i = 0;
    long long steps = 0;
    for (auto _ : state) {
        PathRng rng = path_rng(1, 0, i++);
        const PathSample s = simulate_cbc(m, 1.0, cfg, rng);
        steps += s.steps;
        benchmark::DoNotOptimize(s.terminal_state);
    }
    state.counters["steps/s"] = benchmark::Counter(static_cast<double>(steps), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SimulatePath)->Arg(10)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_SimulateStablePath(benchmark::State& state) {
    const CbcModel m(Mechanism(MechanismKind::Collision, 1e-9, 0.0),
                     Mechanism(MechanismKind::Branching, 0.0, 0.2, StableJumps{1.5, 0.5}));
    SimConfig cfg;
    std::uint64_t i = 0;
    for (auto _ : state) {
        PathRng rng = path_rng(2, 0, i++);
        benchmark::DoNotOptimize(simulate_cbc(m, 1.0, cfg, rng).terminal_state);
    }
}
BENCHMARK(BM_SimulateStablePath)->Unit(benchmark::kMicrosecond);

void BM_McLaplace(benchmark::State& state) {
    const CbcModel m = verhulst_model(1, 1, 1);
    SimConfig cfg;
    cfg.dt = 1e-2;
    for (auto _ : state)
        benchmark::DoNotOptimize(mc_laplace(m, Process::Z, 1.0, 1.0, 1.0, 1000, cfg, McRun{3, 0, 1}).mean);
}
BENCHMARK(BM_McLaplace)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
