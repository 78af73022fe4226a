#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cohbench/config.hpp"
#include "cohbench/stats.hpp"

namespace cohbench::workloads {

// The three CPU<->device datapaths under comparison. All of them expose the
// same request/response byte contract; only the cost structure differs.
enum class Transport : std::uint8_t {
  EciPio,         // messaging over the simulated coherent interconnect
  PciePio,        // posted writes + serialized non-posted reads
  PcieDmaPolled,  // descriptor-ring transfers, polled completion
  PcieDmaIrq,     // descriptor-ring transfers, interrupt completion
};

const char* to_string(Transport t);
std::optional<Transport> transport_from_string(std::string_view s);

enum class WorkloadKind : std::uint8_t {
  Invoke,
  NicRx,
  NicTx,
  OffloadBloom,
  OffloadFilterChain,
  FfwdReal,
};

const char* to_string(WorkloadKind w);

struct ExperimentSpec {
  WorkloadKind workload = WorkloadKind::Invoke;
  Transport transport = Transport::EciPio;
  // Payload bytes (invoke, nic) or batch elements/bytes (offload).
  std::uint64_t size = 128;
  std::uint64_t iters = 100;
  std::uint64_t seed = 0;
  // When set, simulated runs append their message trace here
  // (time,src,dst,kind,line,state per delivery).
  std::string trace_path;
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<std::uint64_t> latencies_ns;  // warmup excluded
  LatencySummary summary;
  double throughput_bytes_per_s = 0.0;
  // ECI runs: one-way link messages per iteration (constant per run).
  std::uint64_t messages_per_iter = 0;
  // Offload runs: the software-only model for the same batch.
  std::uint64_t cpu_baseline_ns = 0;
};

// Dispatches on spec.workload. One warmup iteration runs first and is not
// recorded, so every recorded iteration sees the channel in steady state.
ExperimentResult run_experiment(const Config& cfg, const ExperimentSpec& spec);

ExperimentResult run_invocation(const Config& cfg, const ExperimentSpec& spec);
ExperimentResult run_nic(const Config& cfg, const ExperimentSpec& spec);
ExperimentResult run_offload(const Config& cfg, const ExperimentSpec& spec);

// Smallest batch (elements) at which the offloaded Bloom path beats the
// software-only path, scanning batch = 1, 2, 4, ... up to `max_batch`.
struct CrossoverReport {
  bool found = false;
  std::uint64_t batch = 0;
  std::uint64_t device_ns = 0;
  std::uint64_t cpu_ns = 0;
};
CrossoverReport bloom_crossover(const Config& cfg, Transport transport,
                                std::uint64_t max_batch);

}  // namespace cohbench::workloads
