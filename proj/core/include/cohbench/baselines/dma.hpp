#pragma once

#include <cstdint>
#include <optional>

#include "cohbench/config.hpp"
#include "cohbench/sim/rng.hpp"

namespace cohbench::baselines {

enum class DmaMode { Polled, Irq };

// Descriptor-ring transfer cost model. Latency is dominated by descriptor
// setup and manipulation, so it is near-flat below the transaction size
// limit. The optional jitter adds rare large spikes, which is where the
// heavy tails of a software-driven datapath come from.
struct DmaParams {
  std::uint64_t desc_overhead_ns = 20000;
  double per_byte_ns = 0.1;
  std::uint64_t irq_extra_ns = 3000;
  std::uint32_t max_tlp_bytes = 4096;
  std::uint64_t nic_rx_fixed_ns = 65390;
  std::uint64_t nic_tx_fixed_ns = 10060;

  bool jitter = false;
  double jitter_p_spike = 0.005;
  double jitter_spike_min = 1.5;
  double jitter_spike_max = 2.0;

  static DmaParams from_config(const Config& cfg);
};

// One descriptor unit of overhead per max_tlp chunk plus streaming cost.
std::uint64_t dma_transfer_latency_ns(const DmaParams& p,
                                      std::uint64_t size_bytes, DmaMode mode);

// NIC datapath: fixed receive/transmit cost plus streaming.
std::uint64_t dma_nic_rx_latency_ns(const DmaParams& p,
                                    std::uint64_t size_bytes);
std::uint64_t dma_nic_tx_latency_ns(const DmaParams& p,
                                    std::uint64_t size_bytes);

// Applies the heavy-tail multiplier (identity when jitter is off).
std::uint64_t apply_dma_jitter(const DmaParams& p, std::uint64_t base_ns,
                               sim::Rng& rng);

}  // namespace cohbench::baselines
