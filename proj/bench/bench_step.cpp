// Serial versus OpenMP step kernel on populations spread over the bulk.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "bbmwave/bbm_sim.hpp"

namespace {

using namespace bbmwave::sim;

PopulationState spread(std::size_t n) {
  PopulationState s;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = -20.0 + 30.0 * static_cast<double>(i) / static_cast<double>(n);
    s.alive.push_back({s.next_id++, -1, x, 0.0, Status::alive});
  }
  return s;
}

template <void (*Step)(PopulationState&, const SimConfig&, const bbmwave::rng::Stream&)>
void run(benchmark::State& bs) {
  const auto cfg = SimConfig::make(0.5, RateFamily::canonical(0.01), 0.02, 1e6, {});
  const bbmwave::rng::Stream stream(1);
  const auto base = spread(static_cast<std::size_t>(bs.range(0)));
  for (auto _ : bs) {
    bs.PauseTiming();
    PopulationState s = base;
    bs.ResumeTiming();
    Step(s, cfg, stream);
    benchmark::DoNotOptimize(s.alive.data());
  }
  bs.SetItemsProcessed(bs.iterations() * bs.range(0));
  bs.counters["threads"] = omp_get_max_threads();
}

void serial(benchmark::State& bs) { run<step_serial>(bs); }
void parallel(benchmark::State& bs) { run<step_parallel>(bs); }

}  // namespace

BENCHMARK(serial)->RangeMultiplier(8)->Range(1 << 10, 1 << 22)->Unit(benchmark::kMicrosecond);
BENCHMARK(parallel)->RangeMultiplier(8)->Range(1 << 10, 1 << 22)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
