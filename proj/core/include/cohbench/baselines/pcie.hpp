#pragma once

#include <cstdint>

#include "cohbench/config.hpp"

namespace cohbench::baselines {

// Calibrated peripheral-bus cost model. Reads are non-posted: each beat must
// complete before the next starts, one bus round trip per read_width bytes.
// Writes are posted and combined, so they stream at write_stream_rate after
// a fixed setup cost.
struct PcieParams {
  std::uint64_t read_rtt_ns = 750;
  std::uint32_t read_width_bytes = 16;
  std::uint32_t write_combine_bytes = 64;
  double write_stream_rate = 1.0;  // bytes per ns
  std::uint64_t write_fixed_ns = 280;

  static PcieParams from_config(const Config& cfg);
};

// ceil(size / read_width) serialized round trips; zero for size 0.
std::uint64_t pcie_pio_read_latency_ns(const PcieParams& p,
                                       std::uint64_t size_bytes);

// Fixed doorbell cost plus pipelined streaming.
std::uint64_t pcie_pio_write_latency_ns(const PcieParams& p,
                                        std::uint64_t size_bytes);

}  // namespace cohbench::baselines
