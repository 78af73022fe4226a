#include <benchmark/benchmark.h>

#include <functional>

#include "cohbench/dev/drivers.hpp"
#include "cohbench/system.hpp"
#include "cohbench/verify/explorer.hpp"

using namespace cohbench;

// Simulator cost of one full coherent exchange (not the modeled latency):
// how many simulated invocations per second the host can grind through.
static void BM_SimulatedInvoke(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  Config cfg;
  SystemParams params = SystemParams::from_config(cfg);
  sim::Engine engine(1);
  System sys(engine, params);
  const dev::ChannelId ch = sys.open_invoke_channel(n);
  dev::InvokeDriver driver(engine, sys.cpu(), sys.device(), ch);
  std::vector<std::uint8_t> request(n * params.line_size, 0x5a);

  for (auto _ : state) {
    bool done = false;
    driver.invoke(request, static_cast<std::uint32_t>(request.size()),
                  [&](dev::InvokeDriver::Result) { done = true; });
    engine.run_until_quiescent();
    benchmark::DoNotOptimize(done);
  }
  state.SetItemsProcessed(state.iterations());
  state.SetBytesProcessed(state.iterations() *
                          static_cast<std::int64_t>(request.size()));
}
BENCHMARK(BM_SimulatedInvoke)->Arg(1)->Arg(8)->Arg(256);

static void BM_ExhaustiveExplore(benchmark::State& state) {
  for (auto _ : state) {
    verify::ExploreOptions opt;
    opt.epochs = static_cast<int>(state.range(0));
    auto report = verify::explore_invoke_protocol(opt);
    benchmark::DoNotOptimize(report.states);
  }
}
BENCHMARK(BM_ExhaustiveExplore)->Arg(1)->Arg(2);
