#include <benchmark/benchmark.h>

#include "cohbench/sim/engine.hpp"

using cohbench::sim::Engine;
using cohbench::sim::SimTime;

// Raw event throughput of the discrete-event core.
static void BM_EngineEventChurn(benchmark::State& state) {
  const int depth = static_cast<int>(state.range(0));
  for (auto _ : state) {
    Engine eng;
    int remaining = depth;
    std::function<void()> tick = [&] {
      if (--remaining > 0) eng.schedule(1, tick);
    };
    eng.schedule(1, tick);
    auto stats = eng.run_until_quiescent();
    benchmark::DoNotOptimize(stats.events_processed);
  }
  state.SetItemsProcessed(state.iterations() * depth);
}
BENCHMARK(BM_EngineEventChurn)->Arg(1000)->Arg(10000);

static void BM_EngineHeapMix(benchmark::State& state) {
  const int fanout = static_cast<int>(state.range(0));
  for (auto _ : state) {
    Engine eng(7);
    for (int i = 0; i < fanout; ++i) {
      eng.schedule(eng.rng().below(1000), [] {});
    }
    auto stats = eng.run_until_quiescent();
    benchmark::DoNotOptimize(stats.wall_clock_end);
  }
  state.SetItemsProcessed(state.iterations() * fanout);
}
BENCHMARK(BM_EngineHeapMix)->Arg(256)->Arg(4096);
