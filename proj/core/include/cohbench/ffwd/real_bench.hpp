#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cohbench/stats.hpp"

namespace cohbench::ffwd {

struct RealBenchOptions {
  std::uint64_t iterations = 1'000'000;
  std::uint32_t payload_bytes = 64;  // at most one line minus the flag
  std::optional<int> pin_a;          // ping thread core
  std::optional<int> pin_b;          // pong thread core
};

struct FfStats {
  std::uint64_t messages = 0;
  std::uint64_t lost = 0;
  std::uint64_t out_of_order = 0;
  std::uint64_t corrupted = 0;
  bool pinned = true;  // false: affinity request failed, ran unpinned
  LatencySummary latency;  // one-way estimate (round trip / 2), wall time
  std::vector<std::uint64_t> samples_ns;
};

// Actual cache-line ping-pong between two threads: one line-sized cell per
// direction, a monotonically increasing sequence published with release
// ordering and read with acquire ordering. Latency numbers depend on the
// host and are reported, never asserted.
FfStats run_real_pingpong(const RealBenchOptions& options);

}  // namespace cohbench::ffwd
