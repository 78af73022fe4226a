#include "cohbench/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace cohbench {

namespace {

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError("config: value for '" + std::string(key) +
                      "' is not an unsigned integer: '" + std::string(v) + "'");
  }
  return out;
}

double parse_f64(std::string_view key, std::string_view v) {
  try {
    size_t pos = 0;
    double out = std::stod(std::string(v), &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: value for '" + std::string(key) +
                      "' is not a number: '" + std::string(v) + "'");
  }
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: value for '" + std::string(key) +
                    "' is not a boolean (on/off): '" + std::string(v) + "'");
}

}  // namespace

Config::Config() {
  auto u = [this](const char* k, std::uint64_t v, const char* doc) {
    define(k, Type::U64, std::to_string(v), doc);
  };
  auto f = [this](const char* k, const char* v, const char* doc) {
    define(k, Type::F64, v, doc);
  };
  auto b = [this](const char* k, bool v, const char* doc) {
    define(k, Type::Bool, v ? "on" : "off", doc);
  };

  u("seed", 0, "base seed for every pseudo-random choice");
  u("line.size_bytes", 128, "coherent cache line size");

  u("link.one_way_ns", 150, "link-layer one-way message latency");
  b("link.reorder", false,
    "bounded random reordering of in-flight messages (robustness runs)");
  u("link.reorder_window", 4, "reorder window, in messages");

  b("jitter.enabled", false, "per-message noise + DMA tail spikes");
  u("jitter.link_span_ns", 30, "max added per-message link noise when on");

  u("dir.proc_ns", 150, "directory processing cost per transaction");

  u("cpu.cache_bytes", 32768, "point-of-coherence cache capacity");
  u("cpu.timeout_ns", 100000000,
    "blocked-request deadline before a simulated machine check");

  u("tad.count", 64, "independent cache transaction units");
  u("tad.capacity", 16, "simultaneous transactions per unit");

  b("dev.exclusive_return", true,
    "device answers a shared request with an exclusive grant");
  u("dev.shared_return_penalty_ns", 700,
    "extra per-invocation cost when exclusive return is off "
    "(one upgrade round trip plus a fixed residual)");
  u("dev.per_line_pipeline_ns", 51,
    "device response pipeline interval per extra line");
  f("dev.thrash_factor", "1.3",
    "per-line multiplier once a group exceeds the CPU cache");
  u("dev.timeout_ns", 100000000, "deferred-request hardware timeout");
  f("dev.retry_margin", "0.9",
    "fraction of the timeout after which a not-ready reply is sent");

  u("nic.rx_fixed_ns", 150, "ingress handoff cost, MAC to channel");
  u("nic.per_line_rx_ns", 519, "receive-side per-line pipeline interval");
  u("nic.tx_fixed_ns", 310, "egress handoff cost, channel to MAC");
  u("nic.per_line_tx_ns", 102, "transmit-side per-line ingest interval");
  u("nic.max_frame_bytes", 9600, "largest frame a NIC channel carries");

  u("pcie.read_rtt_ns", 750, "bus round trip per non-posted read beat");
  u("pcie.read_width_bytes", 16, "read bus width per beat");
  u("pcie.write_combine_bytes", 64, "write-combining transaction size");
  f("pcie.write_stream_bytes_per_ns", "1.0",
    "posted-write streaming rate (pipelined)");
  u("pcie.write_fixed_ns", 280, "fixed posted-write cost (doorbell floor)");

  u("dma.desc_overhead_ns", 20000,
    "descriptor setup/manipulation cost per transfer unit (approximate fit)");
  f("dma.per_byte_ns", "0.1", "payload streaming cost");
  u("dma.irq_extra_ns", 3000, "extra cost in interrupt-driven mode");
  u("dma.max_tlp_bytes", 4096, "transaction size limit per descriptor unit");
  u("dma.nic_rx_fixed_ns", 65390, "NIC receive path fixed cost");
  u("dma.nic_tx_fixed_ns", 10060, "NIC transmit path fixed cost");
  f("dma.jitter_p_spike", "0.005", "per-sample tail spike probability");
  f("dma.jitter_spike_min", "1.5", "smallest tail spike multiplier");
  f("dma.jitter_spike_max", "2.0", "largest tail spike multiplier");

  u("bloom.k", 8, "hash lanes per element");
  u("bloom.element_bytes", 128, "element size");
  u("bloom.cpu_per_element_ns", 2600, "software hash cost per element");
  u("bloom.dev_per_element_ns", 1700, "offloaded hash cost per element");

  u("offload.stream_fixed_ns", 25000, "input streaming overhead per batch");
  u("offload.filters", 31, "filter operators in the synthetic chain");
  u("offload.sw_progress_ns", 1500,
    "software progress message cost per operator (approximate fit)");
  u("offload.cpu_filter_ns", 50, "software per-element cost per batch element");

  u("ffwd.poll_interval_ns", 100, "receiver poll spacing in simulated mode");
  u("ffwd.sender_gap_ns", 0,
    "gap between the sender's two write bursts (premature-poll runs)");
}

void Config::define(std::string key, Type type, std::string value,
                    std::string doc) {
  entries_.emplace(std::move(key),
                   Entry{type, std::move(value), std::move(doc)});
}

const Config::Entry& Config::lookup(std::string_view key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw ConfigError("config: unknown key '" + std::string(key) + "'");
  }
  return it->second;
}

bool Config::has(std::string_view key) const {
  return entries_.find(key) != entries_.end();
}

void Config::set(std::string_view key, std::string_view value) {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw ConfigError("config: unknown key '" + std::string(key) + "'");
  }
  std::string v = trim(value);
  // Parse now so bad values name the offending key at load time.
  switch (it->second.type) {
    case Type::U64:
      parse_u64(key, v);
      break;
    case Type::F64:
      parse_f64(key, v);
      break;
    case Type::Bool:
      v = parse_bool(key, v) ? "on" : "off";
      break;
  }
  it->second.value = v;
}

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: " + path + ":" + std::to_string(lineno) +
                        ": expected key = value");
    }
    set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
}

Config Config::load(const std::string& path,
                    const std::vector<std::string>& overrides) {
  Config cfg;
  if (!path.empty()) cfg.load_file(path);
  for (const std::string& kv : overrides) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: override must be key=value: '" + kv + "'");
    }
    cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

std::uint64_t Config::get_u64(std::string_view key) const {
  const Entry& e = lookup(key);
  if (e.type != Type::U64) throw ConfigError("config: '" + std::string(key) + "' is not an integer key");
  return parse_u64(key, e.value);
}

double Config::get_f64(std::string_view key) const {
  const Entry& e = lookup(key);
  if (e.type == Type::Bool) throw ConfigError("config: '" + std::string(key) + "' is not a numeric key");
  return parse_f64(key, e.value);
}

bool Config::get_bool(std::string_view key) const {
  const Entry& e = lookup(key);
  if (e.type != Type::Bool) throw ConfigError("config: '" + std::string(key) + "' is not a boolean key");
  return e.value == "on";
}

void Config::validate() const {
  auto positive_u = [this](const char* k) {
    if (get_u64(k) == 0) throw ConfigError(std::string("config: '") + k + "' must be positive");
  };
  auto positive_f = [this](const char* k) {
    if (get_f64(k) <= 0.0) throw ConfigError(std::string("config: '") + k + "' must be positive");
  };
  positive_u("line.size_bytes");
  positive_u("tad.count");
  positive_u("tad.capacity");
  positive_u("bloom.k");
  positive_u("bloom.element_bytes");
  positive_u("pcie.read_rtt_ns");
  positive_u("pcie.read_width_bytes");
  positive_u("pcie.write_combine_bytes");
  positive_f("pcie.write_stream_bytes_per_ns");
  positive_u("dma.max_tlp_bytes");
  if (get_u64("pcie.read_width_bytes") > get_u64("pcie.write_combine_bytes")) {
    throw ConfigError(
        "config: pcie.read_width_bytes must not exceed pcie.write_combine_bytes");
  }
  const double margin = get_f64("dev.retry_margin");
  if (margin <= 0.0 || margin > 1.0) {
    throw ConfigError("config: dev.retry_margin must be in (0, 1]");
  }
  if (get_f64("dev.thrash_factor") < 1.0) {
    throw ConfigError("config: dev.thrash_factor must be >= 1");
  }
}

}  // namespace cohbench
