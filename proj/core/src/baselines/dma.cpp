#include "cohbench/baselines/dma.hpp"

#include <cmath>

namespace cohbench::baselines {

DmaParams DmaParams::from_config(const Config& cfg) {
  DmaParams p;
  p.desc_overhead_ns = cfg.get_u64("dma.desc_overhead_ns");
  p.per_byte_ns = cfg.get_f64("dma.per_byte_ns");
  p.irq_extra_ns = cfg.get_u64("dma.irq_extra_ns");
  p.max_tlp_bytes = static_cast<std::uint32_t>(cfg.get_u64("dma.max_tlp_bytes"));
  p.nic_rx_fixed_ns = cfg.get_u64("dma.nic_rx_fixed_ns");
  p.nic_tx_fixed_ns = cfg.get_u64("dma.nic_tx_fixed_ns");
  p.jitter = cfg.get_bool("jitter.enabled");
  p.jitter_p_spike = cfg.get_f64("dma.jitter_p_spike");
  p.jitter_spike_min = cfg.get_f64("dma.jitter_spike_min");
  p.jitter_spike_max = cfg.get_f64("dma.jitter_spike_max");
  return p;
}

namespace {
std::uint64_t stream_cost(double per_byte_ns, std::uint64_t size_bytes) {
  return static_cast<std::uint64_t>(
      std::llround(per_byte_ns * static_cast<double>(size_bytes)));
}
}  // namespace

std::uint64_t dma_transfer_latency_ns(const DmaParams& p,
                                      std::uint64_t size_bytes, DmaMode mode) {
  const std::uint64_t units =
      size_bytes == 0 ? 1
                      : (size_bytes + p.max_tlp_bytes - 1) / p.max_tlp_bytes;
  std::uint64_t ns = units * p.desc_overhead_ns +
                     stream_cost(p.per_byte_ns, size_bytes);
  if (mode == DmaMode::Irq) ns += p.irq_extra_ns;
  return ns;
}

std::uint64_t dma_nic_rx_latency_ns(const DmaParams& p,
                                    std::uint64_t size_bytes) {
  return p.nic_rx_fixed_ns + stream_cost(p.per_byte_ns, size_bytes);
}

std::uint64_t dma_nic_tx_latency_ns(const DmaParams& p,
                                    std::uint64_t size_bytes) {
  return p.nic_tx_fixed_ns + stream_cost(p.per_byte_ns, size_bytes);
}

std::uint64_t apply_dma_jitter(const DmaParams& p, std::uint64_t base_ns,
                               sim::Rng& rng) {
  if (!p.jitter) return base_ns;
  const double u = rng.unit();
  double mult;
  if (u < p.jitter_p_spike) {
    mult = p.jitter_spike_min +
           rng.unit() * (p.jitter_spike_max - p.jitter_spike_min);
  } else {
    mult = 1.0 + rng.unit() * 0.01;  // baseline scheduling noise
  }
  return static_cast<std::uint64_t>(
      std::llround(static_cast<double>(base_ns) * mult));
}

}  // namespace cohbench::baselines
