#include <benchmark/benchmark.h>

#include <limits>

#include "decayrate/audio.hpp"
#include "decayrate/bench.hpp"
#include "decayrate/model.hpp"

using namespace decayrate;

namespace {

McConfig sweep_config(int workers) {
    McConfig c;
    c.rho_list = {0.008};
    c.n_list = {200, 1000};
    c.trials = 200;
    c.workers = workers;
    return c;
}

void BM_SweepSerial(benchmark::State& state) {
    const auto c = sweep_config(1);
    for (auto _ : state) benchmark::DoNotOptimize(run_sweep_serial(c));
}
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond);

void BM_SweepParallel(benchmark::State& state) {
    const auto c = sweep_config(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(run_sweep(c));
}
BENCHMARK(BM_SweepParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ConvolveReference(benchmark::State& state) {
    const auto dry = synth_polack({0.0, 0.0, 1.0}, 40000, 1);
    const auto rir = synth_rir(0.4, 8000.0, 4800, -std::numeric_limits<double>::infinity(), 2);
    for (auto _ : state) benchmark::DoNotOptimize(convolve_reference(dry, rir));
}
BENCHMARK(BM_ConvolveReference)->Unit(benchmark::kMillisecond);

void BM_Convolve(benchmark::State& state) {
    const auto dry = synth_polack({0.0, 0.0, 1.0}, 40000, 1);
    const auto rir = synth_rir(0.4, 8000.0, 4800, -std::numeric_limits<double>::infinity(), 2);
    const int workers = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(convolve(dry, rir, workers));
}
BENCHMARK(BM_Convolve)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
