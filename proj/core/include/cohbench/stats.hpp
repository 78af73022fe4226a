#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace cohbench {

// Percentile statistics of one experiment, nanoseconds. Percentiles are
// nearest-rank on the sorted sample, so p100 is the maximum.
struct LatencySummary {
  std::uint64_t p50 = 0;
  std::uint64_t p95 = 0;
  std::uint64_t p99 = 0;
  std::uint64_t p100 = 0;
  double mean = 0.0;
  std::uint64_t n = 0;
};

// Nearest-rank percentiles. Throws std::invalid_argument on an empty sample.
LatencySummary percentiles(std::span<const std::uint64_t> samples);

inline LatencySummary percentiles(const std::vector<std::uint64_t>& samples) {
  return percentiles(std::span<const std::uint64_t>(samples));
}

}  // namespace cohbench
