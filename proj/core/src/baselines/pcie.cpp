#include "cohbench/baselines/pcie.hpp"

#include <cmath>

namespace cohbench::baselines {

PcieParams PcieParams::from_config(const Config& cfg) {
  PcieParams p;
  p.read_rtt_ns = cfg.get_u64("pcie.read_rtt_ns");
  p.read_width_bytes =
      static_cast<std::uint32_t>(cfg.get_u64("pcie.read_width_bytes"));
  p.write_combine_bytes =
      static_cast<std::uint32_t>(cfg.get_u64("pcie.write_combine_bytes"));
  p.write_stream_rate = cfg.get_f64("pcie.write_stream_bytes_per_ns");
  p.write_fixed_ns = cfg.get_u64("pcie.write_fixed_ns");
  return p;
}

std::uint64_t pcie_pio_read_latency_ns(const PcieParams& p,
                                       std::uint64_t size_bytes) {
  if (size_bytes == 0) return 0;
  const std::uint64_t beats =
      (size_bytes + p.read_width_bytes - 1) / p.read_width_bytes;
  return beats * p.read_rtt_ns;
}

std::uint64_t pcie_pio_write_latency_ns(const PcieParams& p,
                                        std::uint64_t size_bytes) {
  const double stream = static_cast<double>(size_bytes) / p.write_stream_rate;
  return p.write_fixed_ns + static_cast<std::uint64_t>(std::llround(stream));
}

}  // namespace cohbench::baselines
