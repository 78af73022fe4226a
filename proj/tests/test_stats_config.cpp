#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "cohbench/config.hpp"
#include "cohbench/csv.hpp"
#include "cohbench/sim/rng.hpp"
#include "cohbench/stats.hpp"

using cohbench::Config;
using cohbench::ConfigError;
using cohbench::LatencySummary;
using cohbench::percentiles;

namespace {

// Independent oracle: full sort plus direct nearest-rank indexing.
LatencySummary sort_oracle(std::vector<std::uint64_t> v) {
  std::sort(v.begin(), v.end());
  auto rank = [&](int p) {
    std::uint64_t r = (static_cast<std::uint64_t>(p) * v.size() + 99) / 100;
    if (r == 0) r = 1;
    return v[r - 1];
  };
  LatencySummary s;
  s.n = v.size();
  s.p50 = rank(50);
  s.p95 = rank(95);
  s.p99 = rank(99);
  s.p100 = v.back();
  return s;
}

}  // namespace

TEST_CASE("single sample: every percentile is that sample") {
  auto s = percentiles(std::vector<std::uint64_t>{5});
  CHECK(s.p50 == 5);
  CHECK(s.p95 == 5);
  CHECK(s.p99 == 5);
  CHECK(s.p100 == 5);
  CHECK(s.mean == doctest::Approx(5.0));
  CHECK(s.n == 1);
}

TEST_CASE("1..100 hits the nearest-rank definition exactly") {
  std::vector<std::uint64_t> v(100);
  for (int i = 0; i < 100; ++i) v[i] = static_cast<std::uint64_t>(100 - i);
  auto s = percentiles(v);
  CHECK(s.p50 == 50);
  CHECK(s.p95 == 95);
  CHECK(s.p99 == 99);
  CHECK(s.p100 == 100);
}

TEST_CASE("empty sample is rejected") {
  CHECK_THROWS_AS(percentiles(std::vector<std::uint64_t>{}),
                  std::invalid_argument);
}

TEST_CASE("heavy-tailed samples match the sort-based oracle exactly") {
  cohbench::sim::Rng rng(7);
  std::vector<std::uint64_t> v;
  v.reserve(10000);
  for (int i = 0; i < 10000; ++i) {
    // Roughly lognormal: exponent of a sum of uniforms.
    double e = 0;
    for (int j = 0; j < 4; ++j) e += rng.unit();
    v.push_back(static_cast<std::uint64_t>(std::exp(e * 3.0) * 100.0));
  }
  auto got = percentiles(v);
  auto want = sort_oracle(v);
  CHECK(got.p50 == want.p50);
  CHECK(got.p95 == want.p95);
  CHECK(got.p99 == want.p99);
  CHECK(got.p100 == want.p100);
  CHECK(got.p50 <= got.p95);
  CHECK(got.p95 <= got.p99);
  CHECK(got.p99 <= got.p100);
}

TEST_CASE("defaults load and validate") {
  Config cfg;
  cfg.validate();
  CHECK(cfg.get_u64("link.one_way_ns") == 150);
  CHECK(cfg.get_u64("dir.proc_ns") == 150);
  CHECK(cfg.get_u64("dev.shared_return_penalty_ns") == 700);
  CHECK(cfg.get_u64("dev.per_line_pipeline_ns") == 51);
  CHECK(cfg.get_u64("pcie.read_rtt_ns") == 750);
  CHECK(cfg.get_u64("dma.nic_rx_fixed_ns") == 65390);
  CHECK(cfg.get_u64("bloom.k") == 8);
  CHECK(cfg.get_bool("dev.exclusive_return"));
  CHECK_FALSE(cfg.get_bool("jitter.enabled"));
}

TEST_CASE("unknown keys are rejected by name") {
  Config cfg;
  try {
    cfg.set("foo", "1");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("foo") != std::string::npos);
  }
}

TEST_CASE("bad values name the offending key") {
  Config cfg;
  try {
    cfg.set("link.one_way_ns", "fast");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("link.one_way_ns") != std::string::npos);
  }
}

TEST_CASE("file values lose to command-line overrides") {
  const std::string path = "test_config_tmp.cfg";
  {
    std::ofstream f(path);
    f << "# comment\n";
    f << "link.one_way_ns = 200\n";
    f << "dir.proc_ns = 90\n";
  }
  Config cfg = Config::load(path, {"link.one_way_ns=300"});
  CHECK(cfg.get_u64("link.one_way_ns") == 300);  // override wins
  CHECK(cfg.get_u64("dir.proc_ns") == 90);       // file wins over default
  CHECK(cfg.get_u64("tad.capacity") == 16);      // default preserved
  std::remove(path.c_str());
}

TEST_CASE("malformed file lines report the file and line number") {
  const std::string path = "test_config_bad.cfg";
  {
    std::ofstream f(path);
    f << "link.one_way_ns 300\n";  // missing '='
  }
  Config cfg;
  try {
    cfg.load_file(path);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find(path) != std::string::npos);
    CHECK(what.find(":1") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("cross-key invariants are enforced") {
  Config cfg;
  cfg.set("pcie.read_width_bytes", "128");
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("every key carries documentation") {
  Config cfg;
  for (const auto& [key, entry] : cfg.entries()) {
    CAPTURE(key);
    CHECK_FALSE(entry.doc.empty());
    CHECK_FALSE(entry.value.empty());
  }
}
