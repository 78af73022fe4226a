#include "cohbench/stats.hpp"

#include <algorithm>
#include <numeric>

namespace cohbench {

namespace {

// Nearest-rank: the smallest value with at least p percent of the sample at
// or below it, i.e. sorted[ceil(p*n/100) - 1].
std::uint64_t nearest_rank(std::vector<std::uint64_t>& scratch, int p) {
  const std::uint64_t n = scratch.size();
  std::uint64_t rank = (static_cast<std::uint64_t>(p) * n + 99) / 100;
  if (rank == 0) rank = 1;
  auto nth = scratch.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(scratch.begin(), nth, scratch.end());
  return *nth;
}

}  // namespace

LatencySummary percentiles(std::span<const std::uint64_t> samples) {
  if (samples.empty()) {
    throw std::invalid_argument("percentiles: empty sample");
  }
  std::vector<std::uint64_t> scratch(samples.begin(), samples.end());
  LatencySummary out;
  out.n = samples.size();
  out.p50 = nearest_rank(scratch, 50);
  out.p95 = nearest_rank(scratch, 95);
  out.p99 = nearest_rank(scratch, 99);
  out.p100 = *std::max_element(scratch.begin(), scratch.end());
  long double sum = 0.0L;
  for (std::uint64_t v : samples) sum += static_cast<long double>(v);
  out.mean = static_cast<double>(sum / static_cast<long double>(out.n));
  return out;
}

}  // namespace cohbench
