// Command-line front end: benchmark matrices, the exhaustive protocol
// checker, and the calibration table.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include <CLI11.hpp>

#include "cohbench/config.hpp"
#include "cohbench/csv.hpp"
#include "cohbench/ffwd/real_bench.hpp"
#include "cohbench/runner.hpp"
#include "cohbench/verify/explorer.hpp"
#include "cohbench/workloads/experiments.hpp"

namespace {

using cohbench::Config;
using cohbench::workloads::ExperimentResult;
using cohbench::workloads::ExperimentSpec;
using cohbench::workloads::Transport;
using cohbench::workloads::WorkloadKind;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitInvariant = 4;

struct GlobalOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string csv_dir;
  std::uint64_t iters = 0;  // 0: per-command default
  std::string jitter;       // "", "on", "off"
  std::string trace_path;   // message trace from simulated runs
};

Config make_config(const GlobalOptions& g) {
  Config cfg = Config::load(g.config_path, g.overrides);
  if (g.seed_set) cfg.set("seed", std::to_string(g.seed));
  if (!g.jitter.empty()) cfg.set("jitter.enabled", g.jitter);
  cfg.validate();
  return cfg;
}

std::vector<Transport> parse_transports(const std::string& csv) {
  std::vector<Transport> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    std::size_t comma = csv.find(',', start);
    if (comma == std::string::npos) comma = csv.size();
    const std::string token = csv.substr(start, comma - start);
    if (!token.empty()) {
      auto t = cohbench::workloads::transport_from_string(token);
      if (!t) throw cohbench::ConfigError("unknown transport '" + token + "'");
      out.push_back(*t);
    }
    start = comma + 1;
  }
  if (out.empty()) throw cohbench::ConfigError("no transports given");
  return out;
}

void print_summaries(const std::vector<ExperimentResult>& results) {
  for (const auto& r : results) {
    std::printf(
        "%-20s %-16s size=%-8llu n=%-6llu p50=%llu p95=%llu p99=%llu "
        "p100=%llu ns",
        to_string(r.spec.workload), to_string(r.spec.transport),
        static_cast<unsigned long long>(r.spec.size),
        static_cast<unsigned long long>(r.summary.n),
        static_cast<unsigned long long>(r.summary.p50),
        static_cast<unsigned long long>(r.summary.p95),
        static_cast<unsigned long long>(r.summary.p99),
        static_cast<unsigned long long>(r.summary.p100));
    if (r.throughput_bytes_per_s > 0) {
      std::printf("  %.3f MiB/s", r.throughput_bytes_per_s / (1024.0 * 1024.0));
    }
    if (r.messages_per_iter > 0) {
      std::printf("  msgs/iter=%llu",
                  static_cast<unsigned long long>(r.messages_per_iter));
    }
    if (r.cpu_baseline_ns > 0) {
      std::printf("  cpu_model=%llu ns",
                  static_cast<unsigned long long>(r.cpu_baseline_ns));
    }
    std::printf("\n");
  }
}

int emit(const Config& cfg, std::vector<ExperimentSpec> specs,
         const GlobalOptions& g) {
  std::vector<ExperimentResult> results;
  if (g.csv_dir.empty()) {
    results = cohbench::run_matrix(cfg, specs);
  } else {
    results = cohbench::run_matrix_to_csv(cfg, specs, g.csv_dir);
  }
  print_summaries(results);
  if (!g.csv_dir.empty()) {
    std::printf("wrote %s/raw.csv and %s/summary.csv\n", g.csv_dir.c_str(),
                g.csv_dir.c_str());
  }
  return kExitOk;
}

std::vector<std::uint64_t> default_invoke_sizes() {
  return {16, 32, 64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384, 32768, 65536};
}

int cmd_bench_invoke(const GlobalOptions& g, const std::string& transports,
                     std::vector<std::uint64_t> sizes) {
  Config cfg = make_config(g);
  if (sizes.empty()) sizes = default_invoke_sizes();
  const std::uint64_t iters = g.iters == 0 ? 1000 : g.iters;
  std::vector<ExperimentSpec> specs;
  for (std::uint64_t size : sizes) {
    for (Transport t : parse_transports(transports)) {
      ExperimentSpec s;
      s.workload = WorkloadKind::Invoke;
      s.transport = t;
      s.size = size;
      s.iters = iters;
      s.seed = cfg.get_u64("seed");
      s.trace_path = g.trace_path;
      specs.push_back(s);
    }
  }
  return emit(cfg, std::move(specs), g);
}

int cmd_bench_nic(const GlobalOptions& g, const std::string& transports,
                  std::vector<std::uint64_t> sizes, const std::string& dir) {
  Config cfg = make_config(g);
  if (sizes.empty()) sizes = {64, 1536, 9600};
  const std::uint64_t iters = g.iters == 0 ? 100 : g.iters;
  std::vector<ExperimentSpec> specs;
  std::vector<WorkloadKind> kinds;
  if (dir == "rx") kinds = {WorkloadKind::NicRx};
  else if (dir == "tx") kinds = {WorkloadKind::NicTx};
  else kinds = {WorkloadKind::NicRx, WorkloadKind::NicTx};
  for (WorkloadKind kind : kinds) {
    for (std::uint64_t size : sizes) {
      for (Transport t : parse_transports(transports)) {
        ExperimentSpec s;
        s.workload = kind;
        s.transport = t;
        s.size = size;
        s.iters = iters;
        s.seed = cfg.get_u64("seed");
        s.trace_path = g.trace_path;
        specs.push_back(s);
      }
    }
  }
  return emit(cfg, std::move(specs), g);
}

int cmd_bench_offload(const GlobalOptions& g, const std::string& transports,
                      const std::string& workload,
                      std::vector<std::uint64_t> batches) {
  Config cfg = make_config(g);
  const bool bloom = workload != "filterchain";
  if (batches.empty()) {
    batches = bloom ? std::vector<std::uint64_t>{1, 2, 4, 8, 16, 32, 64, 128}
                    : std::vector<std::uint64_t>{128, 256, 512, 1024, 2048,
                                                 4096, 8192, 16384, 32768};
  }
  const std::uint64_t iters = g.iters == 0 ? 10 : g.iters;
  std::vector<ExperimentSpec> specs;
  for (std::uint64_t b : batches) {
    for (Transport t : parse_transports(transports)) {
      ExperimentSpec s;
      s.workload = bloom ? WorkloadKind::OffloadBloom
                         : WorkloadKind::OffloadFilterChain;
      s.transport = t;
      s.size = b;
      s.iters = iters;
      s.seed = cfg.get_u64("seed");
      specs.push_back(s);
    }
  }
  const int rc = emit(cfg, std::move(specs), g);
  if (bloom) {
    auto cr = cohbench::workloads::bloom_crossover(cfg, Transport::EciPio,
                                                   1 << 20);
    if (cr.found) {
      std::printf(
          "bloom crossover: offload beats the software model from batch %llu "
          "(%llu ns vs %llu ns)\n",
          static_cast<unsigned long long>(cr.batch),
          static_cast<unsigned long long>(cr.device_ns),
          static_cast<unsigned long long>(cr.cpu_ns));
    } else {
      std::printf("bloom crossover: not found\n");
    }
  }
  return rc;
}

int cmd_bench_ffwd(const GlobalOptions& g, const std::string& pin,
                   std::uint64_t payload) {
  Config cfg = make_config(g);
  cohbench::ffwd::RealBenchOptions opt;
  opt.iterations = g.iters == 0 ? 100000 : g.iters;
  opt.payload_bytes = static_cast<std::uint32_t>(payload);
  if (!pin.empty()) {
    const std::size_t comma = pin.find(',');
    if (comma == std::string::npos) {
      throw cohbench::ConfigError("--pin expects two cores, e.g. --pin 0,1");
    }
    opt.pin_a = std::stoi(pin.substr(0, comma));
    opt.pin_b = std::stoi(pin.substr(comma + 1));
  }
  auto stats = cohbench::ffwd::run_real_pingpong(opt);
  std::printf(
      "ffwd real: messages=%llu lost=%llu out_of_order=%llu corrupted=%llu "
      "pinned=%s\n",
      static_cast<unsigned long long>(stats.messages),
      static_cast<unsigned long long>(stats.lost),
      static_cast<unsigned long long>(stats.out_of_order),
      static_cast<unsigned long long>(stats.corrupted),
      stats.pinned ? "yes" : "no (affinity unavailable; values informational)");
  std::printf("ffwd real: one-way p50=%llu p95=%llu p99=%llu p100=%llu ns\n",
              static_cast<unsigned long long>(stats.latency.p50),
              static_cast<unsigned long long>(stats.latency.p95),
              static_cast<unsigned long long>(stats.latency.p99),
              static_cast<unsigned long long>(stats.latency.p100));

  if (!g.csv_dir.empty()) {
    ExperimentResult r;
    r.spec.workload = WorkloadKind::FfwdReal;
    r.spec.transport = Transport::EciPio;
    r.spec.size = payload;
    r.spec.iters = stats.messages;
    r.latencies_ns = stats.samples_ns;
    r.summary = stats.latency;
    std::vector<ExperimentResult> rs{std::move(r)};
    std::error_code ec;
    std::filesystem::create_directories(g.csv_dir, ec);
    if (ec) throw cohbench::IoError("cannot create '" + g.csv_dir + "'");
    cohbench::write_file(g.csv_dir + "/raw.csv", cohbench::raw_csv(rs));
    cohbench::write_file(g.csv_dir + "/summary.csv", cohbench::summary_csv(rs));
  }
  return kExitOk;
}

int cmd_verify(const GlobalOptions& g, int epochs) {
  (void)g;
  using cohbench::verify::ExploreOptions;
  using cohbench::verify::ExploreReport;

  ExploreOptions def;
  def.epochs = epochs;
  ExploreReport d = cohbench::verify::explore_invoke_protocol(def);
  std::printf(
      "verify: independent units : states=%llu transitions=%llu "
      "terminals=%llu deadlocks=%llu swmr=%s swap=%s\n",
      static_cast<unsigned long long>(d.states),
      static_cast<unsigned long long>(d.transitions),
      static_cast<unsigned long long>(d.terminals),
      static_cast<unsigned long long>(d.deadlocks),
      d.swmr_violation ? "VIOLATED" : "ok",
      d.swap_violation ? "VIOLATED" : "ok");
  if (!d.note.empty()) std::printf("verify: note: %s\n", d.note.c_str());

  ExploreOptions hz;
  hz.epochs = epochs;
  hz.hazard = true;
  ExploreReport h = cohbench::verify::explore_invoke_protocol(hz);
  std::printf(
      "verify: single-unit hazard: states=%llu transitions=%llu "
      "terminals=%llu deadlocks=%llu (expected >= 1)\n",
      static_cast<unsigned long long>(h.states),
      static_cast<unsigned long long>(h.transitions),
      static_cast<unsigned long long>(h.terminals),
      static_cast<unsigned long long>(h.deadlocks));
  if (!h.deadlock_example.empty()) {
    std::printf("verify: hazard example: %s\n", h.deadlock_example.c_str());
  }

  const bool ok = d.clean() && h.deadlocks >= 1 && !h.swmr_violation;
  std::printf("verify: %s\n", ok ? "PASS" : "FAIL");
  return ok ? kExitOk : kExitInvariant;
}

int cmd_calibrate(const GlobalOptions& g) {
  Config cfg = make_config(g);
  std::printf("%-34s %-14s %s\n", "key", "value", "meaning");
  for (const auto& [key, entry] : cfg.entries()) {
    std::printf("%-34s %-14s %s\n", key.c_str(), entry.value.c_str(),
                entry.doc.c_str());
  }
  std::printf(
      "\nDerived values: a coherence round trip costs 2*link.one_way_ns + "
      "dir.proc_ns; the optimized exchange is two round trips. The "
      "per-line constants are fits against the reference platform's "
      "published latency table; dma.desc_overhead_ns is approximate "
      "(figure-level data only).\n");
  return kExitOk;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& csv) {
  std::vector<std::uint64_t> out;
  std::size_t start = 0;
  while (start <= csv.size() && !csv.empty()) {
    std::size_t comma = csv.find(',', start);
    if (comma == std::string::npos) comma = csv.size();
    const std::string token = csv.substr(start, comma - start);
    if (!token.empty()) out.push_back(std::stoull(token));
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coherence-based CPU-device messaging simulator and benchmarks"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "configuration file (key = value)");
  app.add_option("--set", g.overrides, "override, key=value (repeatable)");
  auto* seed_opt = app.add_option("--seed", g.seed, "base seed");
  app.add_option("--csv", g.csv_dir, "directory for raw.csv / summary.csv");
  app.add_option("--iters", g.iters, "iterations per experiment");
  app.add_option("--jitter", g.jitter, "on|off: noise and DMA tail spikes")
      ->check(CLI::IsMember({"on", "off"}));
  app.add_option("--trace", g.trace_path,
                 "write the message trace of simulated runs to this file "
                 "(meant for a single size and transport)");

  auto* bench = app.add_subcommand("bench", "run a benchmark");
  bench->require_subcommand(1);

  std::string transports = "eci_pio,pcie_pio,pcie_dma_polled";
  std::string sizes_csv, dir = "both", offload_workload = "bloom", pin;
  std::uint64_t ffwd_payload = 64;

  auto* invoke = bench->add_subcommand("invoke", "accelerator invocation");
  invoke->add_option("--transports", transports, "comma-separated transports");
  invoke->add_option("--sizes", sizes_csv, "payload sizes in bytes");

  auto* nic = bench->add_subcommand("nic", "NIC receive/transmit");
  nic->add_option("--transports", transports, "comma-separated transports");
  nic->add_option("--sizes", sizes_csv, "packet sizes in bytes");
  nic->add_option("--dir", dir, "rx|tx|both")
      ->check(CLI::IsMember({"rx", "tx", "both"}));

  auto* offload = bench->add_subcommand("offload", "operator offload");
  offload->add_option("--transports", transports, "comma-separated transports");
  offload->add_option("--workload", offload_workload, "bloom|filterchain")
      ->check(CLI::IsMember({"bloom", "filterchain"}));
  offload->add_option("--batches", sizes_csv,
                      "batch sizes (elements for bloom, bytes for filterchain)");

  auto* ffwd = bench->add_subcommand("ffwd", "CPU-CPU cache-line ping-pong");
  ffwd->add_option("--pin", pin, "two cores, e.g. 0,1");
  ffwd->add_option("--payload", ffwd_payload, "payload bytes (<= 120)");

  int verify_epochs = 2;
  auto* verify = app.add_subcommand(
      "verify", "exhaustively check the single-pair protocol");
  verify->add_option("--epochs", verify_epochs, "exchanges per execution");

  app.add_subcommand("calibrate", "print every constant with its meaning");

  CLI11_PARSE(app, argc, argv);
  g.seed_set = seed_opt->count() > 0;

  try {
    if (app.got_subcommand("verify")) return cmd_verify(g, verify_epochs);
    if (app.got_subcommand("calibrate")) return cmd_calibrate(g);
    if (bench->got_subcommand(invoke)) {
      return cmd_bench_invoke(g, transports, parse_u64_list(sizes_csv));
    }
    if (bench->got_subcommand(nic)) {
      return cmd_bench_nic(g, transports, parse_u64_list(sizes_csv), dir);
    }
    if (bench->got_subcommand(offload)) {
      return cmd_bench_offload(g, transports, offload_workload,
                               parse_u64_list(sizes_csv));
    }
    if (bench->got_subcommand(ffwd)) {
      return cmd_bench_ffwd(g, pin, ffwd_payload);
    }
  } catch (const cohbench::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const cohbench::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}
