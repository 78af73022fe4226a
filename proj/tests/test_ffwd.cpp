#include <doctest.h>

#include <vector>

#include "cohbench/ffwd/real_bench.hpp"
#include "cohbench/ffwd/sim_channel.hpp"
#include "cohbench/system.hpp"

using namespace cohbench;

namespace {

struct FfRig {
  Config cfg;
  SystemParams params;
  sim::Engine engine;
  CpuPairSystem sys;

  explicit FfRig(std::uint64_t seed = 0)
      : params(SystemParams::from_config(cfg)), engine(seed),
        sys(engine, params) {}
};

}  // namespace

TEST_CASE("fast path: every message costs exactly two round trips") {
  FfRig rig;
  ffwd::FfSimParams fp;
  fp.poll_interval_ns = 100;
  ffwd::FfSimChannel chan(rig.engine, rig.sys, fp);

  std::vector<std::uint64_t> traversals_per_msg;
  int received = 0;
  constexpr int kMessages = 10;

  std::function<void()> pump = [&] {
    if (received == kMessages) return;
    const std::uint64_t msgs0 = rig.engine.stats().one_way_traversals;
    chan.recv([&, msgs0](ffwd::FfSimChannel::Delivery d) {
      traversals_per_msg.push_back(rig.engine.stats().one_way_traversals -
                                   msgs0);
      CHECK(d.seq == static_cast<std::uint64_t>(received + 1));
      ++received;
      pump();
    });
    chan.send({static_cast<std::uint8_t>(received)}, [] {});
  };
  pump();
  rig.engine.run_until_quiescent();

  REQUIRE(received == kMessages);
  for (auto t : traversals_per_msg) {
    CHECK(t == 4);  // two interconnect round trips
  }
}

TEST_CASE("premature polling wastes round trips") {
  FfRig rig;
  ffwd::FfSimParams fp;
  fp.poll_interval_ns = 0;     // spin as fast as possible
  fp.sender_gap_ns = 1000;     // payload published in two separated bursts
  ffwd::FfSimChannel chan(rig.engine, rig.sys, fp);

  std::uint64_t traversals = 0;
  bool got = false;
  const std::uint64_t msgs0 = rig.engine.stats().one_way_traversals;
  chan.recv([&](ffwd::FfSimChannel::Delivery) {
    traversals = rig.engine.stats().one_way_traversals - msgs0;
    got = true;
  });
  chan.send({0x42}, [] {});
  rig.engine.run_until_quiescent();

  REQUIRE(got);
  CHECK(traversals >= 6);  // at least three round trips: one wasted transfer
}

TEST_CASE("a thousand messages arrive in order with intact payloads") {
  FfRig rig;
  ffwd::FfSimParams fp;
  fp.poll_interval_ns = 50;
  ffwd::FfSimChannel chan(rig.engine, rig.sys, fp);

  constexpr int kMessages = 1000;
  int received = 0;
  std::uint64_t last_seq = 0;
  bool order_ok = true;
  bool payload_ok = true;

  std::function<void()> pump = [&] {
    if (received == kMessages) return;
    chan.recv([&](ffwd::FfSimChannel::Delivery d) {
      if (d.seq != last_seq + 1) order_ok = false;
      last_seq = d.seq;
      const auto want = static_cast<std::uint8_t>(d.seq & 0xff);
      if (d.payload.at(0) != want) payload_ok = false;
      ++received;
      pump();
    });
    chan.send({static_cast<std::uint8_t>((received + 1) & 0xff)}, [] {});
  };
  pump();
  rig.engine.run_until_quiescent();

  CHECK(received == kMessages);
  CHECK(order_ok);
  CHECK(payload_ok);
}

TEST_CASE("delivery is correct whatever the poll timing") {
  for (sim::SimTime interval : {sim::SimTime{0}, sim::SimTime{50},
                                sim::SimTime{1000}}) {
    FfRig rig;
    ffwd::FfSimParams fp;
    fp.poll_interval_ns = interval;
    ffwd::FfSimChannel chan(rig.engine, rig.sys, fp);
    int received = 0;
    bool payload_ok = true;
    std::function<void()> pump = [&] {
      if (received == 20) return;
      chan.recv([&](ffwd::FfSimChannel::Delivery d) {
        if (d.payload.at(0) != static_cast<std::uint8_t>(d.seq)) {
          payload_ok = false;
        }
        ++received;
        pump();
      });
      chan.send({static_cast<std::uint8_t>(received + 1)}, [] {});
    };
    pump();
    rig.engine.run_until_quiescent();
    CAPTURE(interval);
    CHECK(received == 20);
    CHECK(payload_ok);
  }
}

TEST_CASE("real-thread ping-pong is loss-free and ordered") {
  ffwd::RealBenchOptions opt;
  opt.iterations = 10000;  // smoke scale; the acceptance suite runs 10^6
  opt.payload_bytes = 64;
  auto stats = ffwd::run_real_pingpong(opt);
  CHECK(stats.messages == 10000);
  CHECK(stats.lost == 0);
  CHECK(stats.out_of_order == 0);
  CHECK(stats.corrupted == 0);
  CHECK(stats.latency.p50 <= stats.latency.p95);
  CHECK(stats.latency.p95 <= stats.latency.p99);
  CHECK(stats.latency.p99 <= stats.latency.p100);
  CHECK(stats.samples_ns.size() == 10000);
}
