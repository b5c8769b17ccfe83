// OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>

#include <vector>

#include "refrac/mc_sim.hpp"
#include "refrac/spectral.hpp"

using namespace refrac;

namespace {

mc::SimConfig config(std::size_t m) {
  mc::SimConfig cfg;
  cfg.components = m;
  cfg.seed = 3;
  cfg.t_begin = -0.05;
  cfg.t_end = 0.5;
  cfg.bin_width = 1e-3;
  cfg.lambda_max = 50.0;
  return cfg;
}

// d = 0.08 with the output rate stepping from 5 Hz to 10 Hz.
const InputSignal kStep = InputSignal::step(1.0 / (0.2 - 0.08), 1.0 / (0.1 - 0.08), 0.0);

void BM_simulate_serial(benchmark::State& st) {
  const auto cfg = config(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(mc::simulate_serial(kStep, DeadTimeLaw::fixed(0.08), cfg));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_simulate_parallel(benchmark::State& st) {
  const auto cfg = config(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(mc::simulate(kStep, DeadTimeLaw::fixed(0.08), cfg));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

std::vector<double> frequencies() {
  std::vector<double> fs;
  for (double f = 0.5; f <= 40.0; f += 0.5) fs.push_back(f);
  return fs;
}

void BM_sweep_serial(benchmark::State& st) {
  const auto fs = frequencies();
  for (auto _ : st) benchmark::DoNotOptimize(spectral::sweep_serial(DeadTimeLaw::fixed(0.08), 50.0, 0.9, fs, 8));
}

void BM_sweep_parallel(benchmark::State& st) {
  const auto fs = frequencies();
  for (auto _ : st) benchmark::DoNotOptimize(spectral::sweep(DeadTimeLaw::fixed(0.08), 50.0, 0.9, fs, 8));
}

}  // namespace

BENCHMARK(BM_simulate_serial)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate_parallel)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sweep_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sweep_parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
