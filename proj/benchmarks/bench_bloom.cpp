#include <benchmark/benchmark.h>

#include <vector>

#include "cohbench/stats.hpp"
#include "cohbench/workloads/bloom.hpp"

using namespace cohbench;

// Native hash throughput (the software side of the offload comparison).
static void BM_BloomHashes(benchmark::State& state) {
  workloads::BloomParams p;
  std::vector<std::uint8_t> element(p.element_bytes);
  for (std::size_t i = 0; i < element.size(); ++i) {
    element[i] = static_cast<std::uint8_t>(i * 31 + 7);
  }
  for (auto _ : state) {
    auto h = workloads::bloom_hashes(p, element);
    benchmark::DoNotOptimize(h.data());
  }
  state.SetBytesProcessed(state.iterations() * p.element_bytes);
}
BENCHMARK(BM_BloomHashes);

static void BM_BloomBatch(benchmark::State& state) {
  workloads::BloomParams p;
  const auto elems = static_cast<std::size_t>(state.range(0));
  std::vector<std::uint8_t> batch(elems * p.element_bytes);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    batch[i] = static_cast<std::uint8_t>(i);
  }
  for (auto _ : state) {
    auto out = workloads::bloom_hash_batch_bytes(p, batch);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetBytesProcessed(state.iterations() *
                          static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_BloomBatch)->Arg(16)->Arg(256);

static void BM_Percentiles(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::uint64_t> samples(n);
  std::uint64_t x = 88172645463325252ull;
  for (auto& v : samples) {
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    v = x % 1000000;
  }
  for (auto _ : state) {
    auto s = percentiles(samples);
    benchmark::DoNotOptimize(s.p99);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Percentiles)->Arg(1000)->Arg(100000);

BENCHMARK_MAIN();
