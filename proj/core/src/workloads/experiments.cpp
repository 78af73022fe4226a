#include "cohbench/workloads/experiments.hpp"

#include <cassert>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <memory>

#include "cohbench/baselines/dma.hpp"
#include "cohbench/baselines/pcie.hpp"
#include "cohbench/dev/drivers.hpp"
#include "cohbench/system.hpp"
#include "cohbench/workloads/bloom.hpp"

namespace cohbench::workloads {

using baselines::DmaMode;
using baselines::DmaParams;
using baselines::PcieParams;

const char* to_string(Transport t) {
  switch (t) {
    case Transport::EciPio: return "eci_pio";
    case Transport::PciePio: return "pcie_pio";
    case Transport::PcieDmaPolled: return "pcie_dma_polled";
    case Transport::PcieDmaIrq: return "pcie_dma_irq";
  }
  return "?";
}

std::optional<Transport> transport_from_string(std::string_view s) {
  if (s == "eci_pio" || s == "eci") return Transport::EciPio;
  if (s == "pcie_pio") return Transport::PciePio;
  if (s == "pcie_dma_polled" || s == "pcie_dma") return Transport::PcieDmaPolled;
  if (s == "pcie_dma_irq") return Transport::PcieDmaIrq;
  return std::nullopt;
}

const char* to_string(WorkloadKind w) {
  switch (w) {
    case WorkloadKind::Invoke: return "invoke";
    case WorkloadKind::NicRx: return "nic_rx";
    case WorkloadKind::NicTx: return "nic_tx";
    case WorkloadKind::OffloadBloom: return "offload_bloom";
    case WorkloadKind::OffloadFilterChain: return "offload_filterchain";
    case WorkloadKind::FfwdReal: return "ffwd";
  }
  return "?";
}

namespace {

// Line-oriented text trace for debugging simulated runs.
class FileTrace final : public coh::TraceSink {
 public:
  explicit FileTrace(const std::string& path) : out_(path, std::ios::trunc) {}
  bool ok() const { return static_cast<bool>(out_); }
  void on_trace(const coh::TraceRecord& r) override {
    out_ << r.to_line() << '\n';
  }

 private:
  std::ofstream out_;
};

std::uint32_t lines_for(std::uint64_t bytes, std::uint32_t line_size) {
  if (bytes == 0) return 1;
  return static_cast<std::uint32_t>((bytes + line_size - 1) / line_size);
}

std::vector<std::uint8_t> patterned_bytes(sim::Rng& rng, std::uint64_t n) {
  std::vector<std::uint8_t> out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng.next());
  return out;
}

// Iterations run back to back, so the elapsed time of the recorded window
// is the sum of the recorded latencies.
void finish_result(ExperimentResult& r, std::uint64_t bytes_per_iter) {
  r.summary = percentiles(r.latencies_ns);
  std::uint64_t elapsed_ns = 0;
  for (std::uint64_t v : r.latencies_ns) elapsed_ns += v;
  if (elapsed_ns > 0) {
    r.throughput_bytes_per_s =
        static_cast<double>(bytes_per_iter) *
        static_cast<double>(r.latencies_ns.size()) * 1e9 /
        static_cast<double>(elapsed_ns);
  }
}

// Analytic transports run the same compute contract as the simulated one;
// data still flows, only the timing is closed-form.
std::uint64_t analytic_invoke_ns(const Config& cfg, Transport t,
                                 std::uint64_t size) {
  switch (t) {
    case Transport::PciePio: {
      const PcieParams p = PcieParams::from_config(cfg);
      return baselines::pcie_pio_write_latency_ns(p, size) +
             baselines::pcie_pio_read_latency_ns(p, size);
    }
    case Transport::PcieDmaPolled:
    case Transport::PcieDmaIrq: {
      const DmaParams p = DmaParams::from_config(cfg);
      const DmaMode mode = t == Transport::PcieDmaIrq ? DmaMode::Irq
                                                      : DmaMode::Polled;
      return baselines::dma_transfer_latency_ns(p, size, mode) +
             baselines::dma_transfer_latency_ns(p, size, mode);
    }
    default:
      throw std::logic_error("analytic_invoke_ns: not an analytic transport");
  }
}

ExperimentResult run_analytic(const Config& cfg, const ExperimentSpec& spec,
                              std::uint64_t base_ns,
                              std::uint64_t bytes_per_iter) {
  ExperimentResult r;
  r.spec = spec;
  const DmaParams dma = DmaParams::from_config(cfg);
  const bool dma_path = spec.transport == Transport::PcieDmaPolled ||
                        spec.transport == Transport::PcieDmaIrq;
  sim::Rng rng(spec.seed ^ 0x9d5c0f5b3f3cull);
  r.latencies_ns.reserve(spec.iters);
  for (std::uint64_t i = 0; i < spec.iters; ++i) {
    std::uint64_t ns = base_ns;
    if (dma_path) ns = baselines::apply_dma_jitter(dma, ns, rng);
    r.latencies_ns.push_back(ns);
  }
  finish_result(r, bytes_per_iter);
  return r;
}

}  // namespace

ExperimentResult run_invocation(const Config& cfg, const ExperimentSpec& spec) {
  if (spec.transport != Transport::EciPio) {
    return run_analytic(cfg, spec, analytic_invoke_ns(cfg, spec.transport, spec.size),
                        spec.size);
  }

  ExperimentResult r;
  r.spec = spec;
  const SystemParams params = SystemParams::from_config(cfg);
  sim::Engine engine(cfg.get_u64("seed") ^ spec.seed);
  System sys(engine, params);
  std::unique_ptr<FileTrace> trace;
  if (!spec.trace_path.empty()) {
    trace = std::make_unique<FileTrace>(spec.trace_path);
    sys.link().set_trace(trace.get());
  }
  const std::uint32_t n = lines_for(spec.size, params.line_size);
  const dev::ChannelId ch = sys.open_invoke_channel(n);
  dev::InvokeDriver driver(engine, sys.cpu(), sys.device(), ch);

  sim::Rng payload_rng(spec.seed + 1);
  const std::uint64_t total = spec.iters + 1;  // one warmup
  std::uint64_t iter = 0;
  sim::SimTime recorded_start = 0;
  std::uint64_t msgs_at_start = 0;
  std::uint64_t msgs_before_iter = 0;
  std::optional<std::uint64_t> msgs_per_iter;

  std::function<void()> next = [&] {
    if (iter == total) return;
    if (iter == 1) {
      recorded_start = engine.now();
      msgs_at_start = engine.stats().one_way_traversals;
    }
    msgs_before_iter = engine.stats().one_way_traversals;
    auto request = patterned_bytes(payload_rng, spec.size);
    driver.invoke(request, static_cast<std::uint32_t>(spec.size),
                  [&, request](dev::InvokeDriver::Result res) {
                    if (res.response != request) {
                      throw std::runtime_error(
                          "invoke: response bytes do not match the request");
                    }
                    const std::uint64_t msgs =
                        engine.stats().one_way_traversals - msgs_before_iter;
                    if (iter >= 1) {
                      r.latencies_ns.push_back(res.finished - res.started);
                      if (msgs_per_iter && *msgs_per_iter != msgs) {
                        throw std::runtime_error(
                            "invoke: message count varies across iterations");
                      }
                      msgs_per_iter = msgs;
                    }
                    ++iter;
                    next();
                  });
  };
  next();
  engine.run_until_quiescent();
  if (engine.faulted()) {
    throw std::runtime_error("invoke: " + engine.fault_message());
  }
  (void)msgs_at_start;
  (void)recorded_start;
  r.messages_per_iter = msgs_per_iter.value_or(0);
  finish_result(r, spec.size);
  return r;
}

ExperimentResult run_nic(const Config& cfg, const ExperimentSpec& spec) {
  const bool rx = spec.workload == WorkloadKind::NicRx;
  const SystemParams params = SystemParams::from_config(cfg);
  if (spec.size > params.nic_max_frame_bytes) {
    throw std::invalid_argument("nic: oversized frame (max " +
                                std::to_string(params.nic_max_frame_bytes) +
                                " bytes)");
  }

  if (spec.transport == Transport::PciePio) {
    const PcieParams p = PcieParams::from_config(cfg);
    const std::uint64_t ns =
        rx ? baselines::pcie_pio_read_latency_ns(p, spec.size)
           : baselines::pcie_pio_write_latency_ns(p, spec.size);
    return run_analytic(cfg, spec, ns, spec.size);
  }
  if (spec.transport == Transport::PcieDmaPolled ||
      spec.transport == Transport::PcieDmaIrq) {
    const DmaParams p = DmaParams::from_config(cfg);
    std::uint64_t ns = rx ? baselines::dma_nic_rx_latency_ns(p, spec.size)
                          : baselines::dma_nic_tx_latency_ns(p, spec.size);
    if (spec.transport == Transport::PcieDmaIrq) ns += p.irq_extra_ns;
    return run_analytic(cfg, spec, ns, spec.size);
  }

  // Simulated coherent NIC channel.
  ExperimentResult r;
  r.spec = spec;
  sim::Engine engine(cfg.get_u64("seed") ^ spec.seed);
  System sys(engine, params);
  std::unique_ptr<FileTrace> trace;
  if (!spec.trace_path.empty()) {
    trace = std::make_unique<FileTrace>(spec.trace_path);
    sys.link().set_trace(trace.get());
  }
  const std::uint32_t overflow =
      lines_for(params.nic_max_frame_bytes, params.line_size);
  const dev::ChannelId ch = rx ? sys.open_recv_channel(overflow, true)
                               : sys.open_send_channel(overflow, true);

  sim::Rng payload_rng(spec.seed + 2);
  const std::uint64_t total = spec.iters + 1;
  std::uint64_t iter = 0;
  sim::SimTime recorded_start = 0;
  std::uint64_t msgs_before_iter = 0;
  std::optional<std::uint64_t> msgs_per_iter;

  std::vector<std::uint8_t> last_egress;
  sim::SimTime last_egress_at = 0;
  sys.device().set_egress([&](dev::ChannelId, std::vector<std::uint8_t> bytes,
                              sim::SimTime at) {
    last_egress = std::move(bytes);
    last_egress_at = at;
  });

  dev::RecvDriver recv_driver(engine, sys.cpu(), sys.device(), ch);
  dev::SendDriver send_driver(engine, sys.cpu(), sys.device(), ch);

  auto record = [&](std::uint64_t latency, std::uint64_t msgs) {
    if (iter >= 1) {
      r.latencies_ns.push_back(latency);
      if (msgs_per_iter && *msgs_per_iter != msgs) {
        throw std::runtime_error("nic: message count varies across iterations");
      }
      msgs_per_iter = msgs;
    }
    ++iter;
  };

  std::function<void()> next = [&] {
    if (iter == total) return;
    if (iter == 1) recorded_start = engine.now();
    msgs_before_iter = engine.stats().one_way_traversals;
    auto frame = patterned_bytes(payload_rng, spec.size);
    if (rx) {
      sys.device().deliver_packet(ch, frame);
      recv_driver.recv(static_cast<std::uint32_t>(spec.size),
                       [&, frame](dev::RecvDriver::Result res) {
                         if (res.frame != frame) {
                           throw std::runtime_error(
                               "nic rx: delivered frame does not match");
                         }
                         record(res.finished - res.started,
                                engine.stats().one_way_traversals -
                                    msgs_before_iter);
                         next();
                       });
    } else {
      send_driver.send(frame, [&, frame](dev::SendDriver::Result res) {
        if (last_egress != frame) {
          throw std::runtime_error("nic tx: egress frame does not match");
        }
        record(last_egress_at - res.started,
               engine.stats().one_way_traversals - msgs_before_iter);
        next();
      });
    }
  };
  next();
  engine.run_until_quiescent();
  if (engine.faulted()) {
    throw std::runtime_error("nic: " + engine.fault_message());
  }
  (void)recorded_start;
  r.messages_per_iter = msgs_per_iter.value_or(0);
  finish_result(r, spec.size);
  return r;
}

namespace {

// Software-only models for the offload scenarios.
std::uint64_t cpu_bloom_ns(const Config& cfg, std::uint64_t batch_elems) {
  return cfg.get_u64("offload.stream_fixed_ns") +
         batch_elems * cfg.get_u64("bloom.cpu_per_element_ns");
}

std::uint64_t cpu_filterchain_ns(const Config& cfg, std::uint64_t batch_bytes,
                                 std::uint32_t line_size) {
  const std::uint64_t elems =
      (batch_bytes + line_size - 1) / (line_size == 0 ? 1 : line_size);
  return cfg.get_u64("offload.filters") * cfg.get_u64("offload.sw_progress_ns") +
         elems * cfg.get_u64("offload.cpu_filter_ns");
}

std::uint64_t analytic_transfer_ns(const Config& cfg, Transport t,
                                   std::uint64_t bytes_in,
                                   std::uint64_t bytes_out) {
  switch (t) {
    case Transport::PciePio: {
      const PcieParams p = PcieParams::from_config(cfg);
      return baselines::pcie_pio_write_latency_ns(p, bytes_in) +
             baselines::pcie_pio_read_latency_ns(p, bytes_out);
    }
    case Transport::PcieDmaPolled:
    case Transport::PcieDmaIrq: {
      const DmaParams p = DmaParams::from_config(cfg);
      const DmaMode mode = t == Transport::PcieDmaIrq ? DmaMode::Irq
                                                      : DmaMode::Polled;
      return baselines::dma_transfer_latency_ns(p, bytes_in, mode) +
             baselines::dma_transfer_latency_ns(p, bytes_out, mode);
    }
    default:
      throw std::logic_error("analytic_transfer_ns: not analytic");
  }
}

// One simulated bloom batch over the coherent channel; returns the steady
// per-batch latency and checks the device-path hashes against the
// reference. Batches beyond the optimal native transaction size (the CPU
// cache capacity) are carried as several back-to-back transactions.
std::uint64_t simulate_bloom_batch(const Config& cfg, std::uint64_t batch,
                                   std::uint64_t seed) {
  const SystemParams params = SystemParams::from_config(cfg);
  const BloomParams bp = BloomParams::from_config(cfg);
  sim::Engine engine(seed);
  System sys(engine, params);

  dev::ComputeFunction fn;
  fn.apply = [bp](const std::vector<std::uint8_t>& request) {
    return bloom_hash_batch_bytes(bp, request);
  };
  const std::uint64_t per_element = bp.dev_per_element_ns;
  const std::uint32_t element_bytes = bp.element_bytes;
  fn.latency = [per_element, element_bytes](const std::vector<std::uint8_t>& in) {
    return per_element * (in.size() / element_bytes);
  };

  const std::uint64_t max_chunk_elems =
      std::max<std::uint64_t>(1, params.cache.capacity_lines() *
                                     params.line_size / bp.element_bytes);
  const std::uint64_t chunk_elems = std::min<std::uint64_t>(batch, max_chunk_elems);
  const std::uint64_t chunks = (batch + chunk_elems - 1) / chunk_elems;

  const std::uint32_t n = lines_for(chunk_elems * bp.element_bytes,
                                    params.line_size);
  const dev::ChannelId ch = sys.open_invoke_channel(n, fn);
  dev::InvokeDriver driver(engine, sys.cpu(), sys.device(), ch);

  sim::Rng rng(seed + 3);
  std::uint64_t latency = 0;
  std::uint64_t round = 0;  // round 0 warms the channel, round 1 is timed
  std::uint64_t chunk = 0;
  sim::SimTime round_start = 0;
  std::function<void()> one = [&] {
    if (round == 2) return;
    if (chunk == 0) round_start = engine.now();
    std::uint64_t elems = chunk_elems;
    if (chunk == chunks - 1) elems = batch - chunk * chunk_elems;
    auto request = patterned_bytes(rng, elems * bp.element_bytes);
    driver.invoke(request,
                  static_cast<std::uint32_t>(elems * bp.k * 8),
                  [&, request](dev::InvokeDriver::Result res) {
                    const auto expect = bloom_hash_batch_bytes(bp, request);
                    if (res.response != expect) {
                      throw std::runtime_error(
                          "offload: device-path hashes differ from reference");
                    }
                    if (++chunk == chunks) {
                      if (round == 1) latency = res.finished - round_start;
                      chunk = 0;
                      ++round;
                    }
                    one();
                  });
  };
  one();
  engine.run_until_quiescent();
  return latency;
}

}  // namespace

ExperimentResult run_offload(const Config& cfg, const ExperimentSpec& spec) {
  ExperimentResult r;
  r.spec = spec;
  const SystemParams params = SystemParams::from_config(cfg);
  const BloomParams bp = BloomParams::from_config(cfg);
  const std::uint64_t stream_fixed = cfg.get_u64("offload.stream_fixed_ns");

  std::uint64_t per_iter_ns = 0;
  std::uint64_t bytes_per_iter = 0;

  if (spec.workload == WorkloadKind::OffloadBloom) {
    const std::uint64_t batch = spec.size;  // elements
    bytes_per_iter = batch * bp.element_bytes;
    r.cpu_baseline_ns = cpu_bloom_ns(cfg, batch);
    const std::uint64_t compute_ns = batch * bp.dev_per_element_ns;
    switch (spec.transport) {
      case Transport::EciPio:
        per_iter_ns = stream_fixed + simulate_bloom_batch(cfg, batch, spec.seed);
        break;
      default:
        per_iter_ns = stream_fixed +
                      analytic_transfer_ns(cfg, spec.transport, bytes_per_iter,
                                           batch * bp.k * 8) +
                      compute_ns;
        break;
    }
  } else {  // OffloadFilterChain
    const std::uint64_t batch_bytes = spec.size;
    bytes_per_iter = batch_bytes;
    r.cpu_baseline_ns = cpu_filterchain_ns(cfg, batch_bytes, params.line_size);
    const std::uint64_t filters = cfg.get_u64("offload.filters");
    switch (spec.transport) {
      case Transport::EciPio: {
        // Progress exchanges are single-pair invocations; the batch itself
        // moves through a grouped channel.
        const std::uint64_t ctrl_rt =
            2 * (2 * params.link.one_way_ns + params.dir.proc_ns);
        const std::uint32_t n = lines_for(batch_bytes, params.line_size);
        const std::uint64_t data_ns =
            ctrl_rt + (n - 1) * params.per_line_pipeline_ns;
        per_iter_ns = filters * ctrl_rt + data_ns;
        break;
      }
      default: {
        const std::uint64_t ctrl =
            analytic_transfer_ns(cfg, spec.transport, params.line_size,
                                 params.line_size);
        per_iter_ns = filters * ctrl +
                      analytic_transfer_ns(cfg, spec.transport, batch_bytes,
                                           batch_bytes);
        break;
      }
    }
  }

  sim::Rng rng(spec.seed ^ 0x51caf3u);
  const DmaParams dma = DmaParams::from_config(cfg);
  const bool dma_path = spec.transport == Transport::PcieDmaPolled ||
                        spec.transport == Transport::PcieDmaIrq;
  for (std::uint64_t i = 0; i < spec.iters; ++i) {
    std::uint64_t ns = per_iter_ns;
    if (dma_path) ns = baselines::apply_dma_jitter(dma, ns, rng);
    r.latencies_ns.push_back(ns);
  }
  finish_result(r, bytes_per_iter);
  return r;
}

CrossoverReport bloom_crossover(const Config& cfg, Transport transport,
                                std::uint64_t max_batch) {
  CrossoverReport report;
  for (std::uint64_t batch = 1; batch <= max_batch; batch *= 2) {
    ExperimentSpec spec;
    spec.workload = WorkloadKind::OffloadBloom;
    spec.transport = transport;
    spec.size = batch;
    spec.iters = 1;
    ExperimentResult res = run_offload(cfg, spec);
    if (res.summary.p50 < res.cpu_baseline_ns) {
      report.found = true;
      report.batch = batch;
      report.device_ns = res.summary.p50;
      report.cpu_ns = res.cpu_baseline_ns;
      return report;
    }
  }
  return report;
}

ExperimentResult run_experiment(const Config& cfg, const ExperimentSpec& spec) {
  switch (spec.workload) {
    case WorkloadKind::Invoke:
      return run_invocation(cfg, spec);
    case WorkloadKind::NicRx:
    case WorkloadKind::NicTx:
      return run_nic(cfg, spec);
    case WorkloadKind::OffloadBloom:
    case WorkloadKind::OffloadFilterChain:
      return run_offload(cfg, spec);
    case WorkloadKind::FfwdReal:
      throw std::invalid_argument(
          "ffwd runs through the dedicated bench entry point");
  }
  throw std::invalid_argument("unknown workload");
}

}  // namespace cohbench::workloads
