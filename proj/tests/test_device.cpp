#include <doctest.h>

#include <numeric>
#include <vector>

#include "cohbench/dev/drivers.hpp"
#include "cohbench/system.hpp"

using namespace cohbench;
using coh::CacheLineState;
using coh::LineData;
using coh::LineId;
using dev::ChannelId;

namespace {

struct Rig {
  Config cfg;
  SystemParams params;
  sim::Engine engine;
  System sys;

  using Overrides = std::initializer_list<std::pair<const char*, const char*>>;

  explicit Rig(Overrides overrides = {}, std::uint64_t seed = 0)
      : cfg(make_cfg(overrides)),
        params(SystemParams::from_config(cfg)),
        engine(seed),
        sys(engine, params) {}

  static Config make_cfg(Overrides overrides) {
    Config c;
    for (const auto& [k, v] : overrides) c.set(k, v);
    return c;
  }
};

std::vector<std::uint8_t> pattern(std::size_t n, std::uint8_t base = 1) {
  std::vector<std::uint8_t> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = static_cast<std::uint8_t>(base + i * 7);
  }
  return v;
}

struct InvokeOutcome {
  std::vector<std::uint64_t> latencies;
  std::vector<std::uint64_t> messages;
  std::vector<bool> echo_ok;
};

InvokeOutcome run_invokes(Rig& rig, ChannelId ch, std::uint32_t payload,
                          int count,
                          std::vector<std::uint32_t> prefetch_order = {}) {
  dev::InvokeDriver driver(rig.engine, rig.sys.cpu(), rig.sys.device(), ch);
  if (!prefetch_order.empty()) driver.set_prefetch_order(prefetch_order);
  InvokeOutcome out;
  int done = 0;
  std::function<void()> next = [&] {
    if (done == count) return;
    auto request = pattern(payload, static_cast<std::uint8_t>(done + 1));
    const std::uint64_t msgs0 = rig.engine.stats().one_way_traversals;
    driver.invoke(request, payload, [&, request, msgs0](dev::InvokeDriver::Result r) {
      out.latencies.push_back(r.finished - r.started);
      out.messages.push_back(rig.engine.stats().one_way_traversals - msgs0);
      out.echo_ok.push_back(r.response == request);
      ++done;
      next();
    });
  };
  next();
  rig.engine.run_until_quiescent();
  REQUIRE(!rig.engine.faulted());
  return out;
}

}  // namespace

TEST_CASE("open leaves the pair quiescent: request side E, response side I") {
  Rig rig;
  ChannelId ch = rig.sys.open_invoke_channel(1);
  auto view = rig.sys.device().channel(ch);
  CHECK(rig.sys.cpu().line_state(view.group0[0]) == CacheLineState::Exclusive);
  CHECK(rig.sys.cpu().line_state(view.group1[0]) == CacheLineState::Invalid);
  CHECK_FALSE(view.hazard);
}

TEST_CASE("single-unit configuration raises the hazard flag at open") {
  Rig rig({{"tad.count", "1"}, {"tad.capacity", "1"}});
  ChannelId ch = rig.sys.open_invoke_channel(1);
  CHECK(rig.sys.device().channel(ch).hazard);
}

TEST_CASE("optimized single-pair exchange: 900 ns and exactly 4 messages") {
  Rig rig;
  ChannelId ch = rig.sys.open_invoke_channel(1);
  auto out = run_invokes(rig, ch, 128, 50);
  for (int i = 0; i < 50; ++i) {
    CHECK(out.latencies[i] == 900);
    CHECK(out.messages[i] == 4);
    CHECK(out.echo_ok[i]);
  }
}

TEST_CASE("shared-return exchange: 1600 ns and exactly 6 messages steady") {
  Rig rig({{"dev.exclusive_return", "off"}});
  ChannelId ch = rig.sys.open_invoke_channel(1);
  auto out = run_invokes(rig, ch, 128, 50);
  // The very first exchange writes into a line still Exclusive from open;
  // the upgrade cost appears from the second exchange on.
  CHECK(out.latencies[0] == 900);
  CHECK(out.messages[0] == 4);
  for (int i = 1; i < 50; ++i) {
    CHECK(out.latencies[i] == 1600);
    CHECK(out.messages[i] == 6);
    CHECK(out.echo_ok[i]);
  }
}

TEST_CASE("a zero-byte exchange still takes the full control round trips") {
  Rig rig;
  ChannelId ch = rig.sys.open_invoke_channel(1);
  auto out = run_invokes(rig, ch, 0, 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(out.latencies[i] == 900);
    CHECK(out.messages[i] == 4);
  }
}

TEST_CASE("grouped exchanges are affine in the line count") {
  auto latency_for = [](std::uint32_t n) {
    Rig rig;
    ChannelId ch = rig.sys.open_invoke_channel(n);
    auto out = run_invokes(rig, ch, n * 128, 3);
    CHECK(out.echo_ok[2]);
    return out.latencies[2];
  };
  CHECK(latency_for(1) == 900);
  CHECK(latency_for(2) == 951);
  CHECK(latency_for(4) == 900 + 3 * 51);
  CHECK(latency_for(8) == 900 + 7 * 51);
  CHECK(latency_for(256) == 900 + 255 * 51);
}

TEST_CASE("quiescent states swap and parity flips every epoch") {
  Rig rig;
  ChannelId ch = rig.sys.open_invoke_channel(1);
  auto view0 = rig.sys.device().channel(ch);
  const LineId b = view0.group0[0];
  const LineId a = view0.group1[0];

  auto state = [&](const LineId& l) { return rig.sys.cpu().line_state(l); };
  const auto pre_a = state(a);
  const auto pre_b = state(b);
  CHECK(pre_a == CacheLineState::Invalid);
  CHECK(pre_b == CacheLineState::Exclusive);

  run_invokes(rig, ch, 128, 1);
  auto view1 = rig.sys.device().channel(ch);
  CHECK(view1.parity == 1);
  CHECK(view1.epoch == 1);
  // CPU-visible states of (A, B) equal the pre-epoch states of (B, A).
  CHECK(state(a) == pre_b);
  CHECK(state(b) == pre_a);

  run_invokes(rig, ch, 128, 1);
  auto view2 = rig.sys.device().channel(ch);
  CHECK(view2.parity == 0);
  CHECK(state(a) == pre_a);
  CHECK(state(b) == pre_b);
}

TEST_CASE("reversed prefetch delivery still completes with the same bytes") {
  std::vector<std::uint8_t> forward, reversed;
  {
    Rig rig;
    ChannelId ch = rig.sys.open_invoke_channel(8);
    dev::InvokeDriver driver(rig.engine, rig.sys.cpu(), rig.sys.device(), ch);
    auto req = pattern(8 * 128);
    driver.invoke(req, 8 * 128, [&](dev::InvokeDriver::Result r) {
      forward = std::move(r.response);
    });
    rig.engine.run_until_quiescent();
  }
  {
    Rig rig;
    ChannelId ch = rig.sys.open_invoke_channel(8);
    dev::InvokeDriver driver(rig.engine, rig.sys.cpu(), rig.sys.device(), ch);
    driver.set_prefetch_order({7, 6, 5, 4, 3, 2, 1});
    auto req = pattern(8 * 128);
    driver.invoke(req, 8 * 128, [&](dev::InvokeDriver::Result r) {
      reversed = std::move(r.response);
    });
    rig.engine.run_until_quiescent();
  }
  CHECK(forward == pattern(8 * 128));
  CHECK(reversed == forward);
}

TEST_CASE("a quiescent read request means: stall it, fetch the other line") {
  Rig rig;
  ChannelId ch = rig.sys.open_invoke_channel(1);
  auto view = rig.sys.device().channel(ch);
  coh::Message m;
  m.kind = coh::MsgKind::ReqShared;
  m.line = view.group1[0];  // the response-side line
  m.txn = 7;
  m.src = System::kCpu;
  auto action = rig.sys.device().on_request(1234, m);
  CHECK(action.defer);
  CHECK_FALSE(action.respond.has_value());
  REQUIRE(action.pulls.size() == 1);
  CHECK(action.pulls[0].first == view.group0[0]);
  CHECK(action.pulls[0].second == coh::PullKind::InvalidateFetch);
}

TEST_CASE("duplicate requests inside an epoch are answered identically") {
  Rig rig;
  ChannelId ch = rig.sys.open_invoke_channel(2);
  auto view = rig.sys.device().channel(ch);
  auto& device = rig.sys.device();
  auto& cpu = rig.sys.cpu();

  // Write the request and trigger the epoch through line 1 only, so line 0
  // becomes a straggler we can replay by hand.
  auto req = pattern(2 * 128);
  for (int i = 0; i < 2; ++i) {
    LineData d = LineData::zeroed(128);
    for (int j = 0; j < 128; ++j) d.bytes[j] = req[i * 128 + j];
    cpu.store(view.group0[static_cast<std::size_t>(i)], d);
  }
  cpu.barrier([&] { cpu.prefetch(view.group1[1], CacheLineState::Shared); });
  rig.engine.run_until_quiescent();

  coh::Message m;
  m.kind = coh::MsgKind::ReqShared;
  m.line = view.group1[0];
  m.txn = 991;
  m.src = System::kCpu;
  auto first = device.on_request(9001, m);
  m.txn = 992;
  auto second = device.on_request(9002, m);
  REQUIRE(first.respond.has_value());
  REQUIRE(second.respond.has_value());
  REQUIRE(first.respond->data.has_value());
  REQUIRE(second.respond->data.has_value());
  CHECK(first.respond->data->bytes == second.respond->data->bytes);
  CHECK(first.respond->granted == second.respond->granted);
  rig.engine.run_until_quiescent();
}

TEST_CASE("long device computes ride the retry loop, never a fault") {
  // Shrunk timescale: timeout 10 us, compute 100 us = 10x the timeout.
  Rig rig({{"dev.timeout_ns", "10000"}, {"cpu.timeout_ns", "10000"}});
  dev::ComputeFunction slow;
  slow.apply = [](const std::vector<std::uint8_t>& in) { return in; };
  slow.latency = [](const std::vector<std::uint8_t>&) {
    return sim::SimTime{100000};
  };
  ChannelId ch = rig.sys.open_invoke_channel(1, slow);
  auto out = run_invokes(rig, ch, 128, 2);
  CHECK(out.latencies[0] >= 100000);
  CHECK(out.echo_ok[0]);
  CHECK(out.echo_ok[1]);
  CHECK(rig.sys.cpu().retries_seen() >= 1);
  CHECK_FALSE(rig.engine.faulted());
}

TEST_CASE("the hazard configuration wedges and trips the stall detector") {
  Rig rig({{"tad.count", "1"}, {"tad.capacity", "1"}});
  ChannelId ch = rig.sys.open_invoke_channel(1);
  dev::InvokeDriver driver(rig.engine, rig.sys.cpu(), rig.sys.device(), ch);
  bool completed = false;
  driver.invoke(pattern(128), 128,
                [&](dev::InvokeDriver::Result) { completed = true; });
  auto stats = rig.engine.run_until_quiescent(1'000'000);
  CHECK(stats.stalled);
  CHECK_FALSE(completed);
}

TEST_CASE("raw send costs two round trips") {
  Rig rig;
  ChannelId ch = rig.sys.open_send_channel(74, /*nic_timing=*/false);
  dev::SendDriver driver(rig.engine, rig.sys.cpu(), rig.sys.device(), ch);
  std::vector<std::uint8_t> captured;
  rig.sys.device().set_egress(
      [&](ChannelId, std::vector<std::uint8_t> frame, sim::SimTime) {
        captured = std::move(frame);
      });

  std::uint64_t lat1 = 0, lat2 = 0;
  auto frame = pattern(64);
  driver.send(frame, [&](dev::SendDriver::Result r) {
    lat1 = r.finished - r.started;
    driver.send(frame, [&](dev::SendDriver::Result r2) {
      lat2 = r2.finished - r2.started;
    });
  });
  rig.engine.run_until_quiescent();
  CHECK(lat1 == 900);
  CHECK(lat2 == 900);
  CHECK(captured == frame);
}

TEST_CASE("raw receive: first payload line rides the control response") {
  Rig rig;
  ChannelId ch = rig.sys.open_recv_channel(75, /*nic_timing=*/false);
  dev::RecvDriver driver(rig.engine, rig.sys.cpu(), rig.sys.device(), ch);

  std::uint64_t lat_small = 0, lat_12 = 0;
  std::vector<std::uint8_t> got_small, got_12;
  auto small = pattern(64, 3);
  auto mid = pattern(1536, 5);
  rig.sys.device().deliver_packet(ch, small);
  driver.recv(64, [&](dev::RecvDriver::Result r) {
    lat_small = r.finished - r.started;
    got_small = std::move(r.frame);
    rig.sys.device().deliver_packet(ch, mid);
    driver.recv(1536, [&](dev::RecvDriver::Result r2) {
      lat_12 = r2.finished - r2.started;
      got_12 = std::move(r2.frame);
    });
  });
  rig.engine.run_until_quiescent();
  CHECK(lat_small == 900);
  CHECK(got_small == small);
  CHECK(lat_12 == 900 + 11 * 519);  // 12 lines, slope on the extra 11
  CHECK(got_12 == mid);
}

TEST_CASE("send and receive epochs swap their control pair too") {
  Rig rig;
  ChannelId tx = rig.sys.open_send_channel(4);
  ChannelId rx = rig.sys.open_recv_channel(4);
  auto txv = rig.sys.device().channel(tx);
  auto rxv = rig.sys.device().channel(rx);
  auto st = [&](const LineId& l) { return rig.sys.cpu().line_state(l); };

  CHECK(st(txv.group0[0]) == CacheLineState::Exclusive);
  CHECK(st(txv.group1[0]) == CacheLineState::Invalid);

  dev::SendDriver sender(rig.engine, rig.sys.cpu(), rig.sys.device(), tx);
  sender.send(pattern(64), [](dev::SendDriver::Result) {});
  rig.engine.run_until_quiescent();
  CHECK(rig.sys.device().channel(tx).parity == 1);
  CHECK(st(txv.group0[0]) == CacheLineState::Invalid);
  CHECK(st(txv.group1[0]) == CacheLineState::Exclusive);

  dev::RecvDriver receiver(rig.engine, rig.sys.cpu(), rig.sys.device(), rx);
  rig.sys.device().deliver_packet(rx, pattern(64));
  receiver.recv(64, [](dev::RecvDriver::Result) {});
  rig.engine.run_until_quiescent();
  CHECK(rig.sys.device().channel(rx).parity == 1);
  CHECK(st(rxv.group0[0]) == CacheLineState::Invalid);
  CHECK(st(rxv.group1[0]) == CacheLineState::Exclusive);
}

TEST_CASE("receive copes with frame sizes changing every epoch") {
  Rig rig;
  ChannelId ch = rig.sys.open_recv_channel(75, true);
  dev::RecvDriver driver(rig.engine, rig.sys.cpu(), rig.sys.device(), ch);
  const std::vector<std::uint32_t> sizes{9600, 64, 1536, 128, 9600, 64};
  std::size_t i = 0;
  bool all_ok = true;
  std::function<void()> next = [&] {
    if (i == sizes.size()) return;
    auto frame = pattern(sizes[i], static_cast<std::uint8_t>(i + 1));
    rig.sys.device().deliver_packet(ch, frame);
    driver.recv(sizes[i], [&, frame](dev::RecvDriver::Result r) {
      if (r.frame != frame) all_ok = false;
      ++i;
      next();
    });
  };
  next();
  rig.engine.run_until_quiescent();
  CHECK(i == sizes.size());
  CHECK(all_ok);
  CHECK_FALSE(rig.engine.faulted());
}

TEST_CASE("oversized frames are rejected") {
  Rig rig;
  ChannelId send_ch = rig.sys.open_send_channel(74);
  ChannelId recv_ch = rig.sys.open_recv_channel(75);
  // A jumbo frame needs ceil(9600/128) payload lines per epoch.
  CHECK(rig.sys.device().channel(recv_ch).overflow.size() == 75);
  CHECK_THROWS_AS(rig.sys.device().begin_send(send_ch, 75 * 128 + 1),
                  coh::ProtocolError);
  CHECK_THROWS_AS(
      rig.sys.device().deliver_packet(recv_ch,
                                      std::vector<std::uint8_t>(9601)),
      coh::ProtocolError);
}

TEST_CASE("an empty receive queue stalls through the retry guard") {
  Rig rig;
  ChannelId ch = rig.sys.open_recv_channel(75, /*nic_timing=*/true);
  dev::RecvDriver driver(rig.engine, rig.sys.cpu(), rig.sys.device(), ch);

  std::uint64_t finished_at = 0;
  auto frame = pattern(64, 9);
  driver.recv(64, [&](dev::RecvDriver::Result r) {
    finished_at = r.finished;
    CHECK(r.frame == frame);
  });
  // The frame shows up only after 99 ms; the guard answers "not ready yet"
  // at 90 ms so the blocked core never faults.
  rig.engine.schedule(99'000'000,
                      [&] { rig.sys.device().deliver_packet(ch, frame); });
  rig.engine.run_until_quiescent();
  CHECK_FALSE(rig.engine.faulted());
  CHECK(finished_at > 99'000'000);
  CHECK(rig.sys.cpu().retries_seen() >= 1);
  CHECK(rig.sys.dir().stats().retries_sent >= 1);
}

TEST_CASE("the home is transaction-free at quiescence") {
  Rig rig;
  ChannelId inv = rig.sys.open_invoke_channel(4);
  run_invokes(rig, inv, 512, 5);
  CHECK(rig.sys.dir().idle());

  Rig urig({{"dev.exclusive_return", "off"}});
  ChannelId uch = urig.sys.open_invoke_channel(1);
  run_invokes(urig, uch, 128, 5);
  CHECK(urig.sys.dir().idle());
}

TEST_CASE("trace hash is identical across reruns with one seed") {
  auto digest = [](std::uint64_t seed, bool jitter) {
    Rig rig({{"jitter.enabled", jitter ? "on" : "off"}}, seed);
    coh::TraceHasher hasher;
    rig.sys.link().set_trace(&hasher);
    ChannelId ch = rig.sys.open_invoke_channel(2);
    run_invokes(rig, ch, 256, 5);
    return hasher.digest();
  };
  CHECK(digest(1, false) == digest(1, false));
  CHECK(digest(1, true) == digest(1, true));
  CHECK(digest(1, false) != digest(2, true));
}

TEST_CASE("payload integrity holds under reordering and random stalls") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rig rig({{"link.reorder", "on"}}, seed);
    sim::Rng r(seed * 77 + 1);
    const auto n = static_cast<std::uint32_t>(1 + r.below(4));
    dev::ComputeFunction fn;
    fn.apply = [](const std::vector<std::uint8_t>& in) { return in; };
    const sim::SimTime defer = r.below(2000);
    fn.latency = [defer](const std::vector<std::uint8_t>&) { return defer; };
    ChannelId ch = rig.sys.open_invoke_channel(n, fn);
    auto out = run_invokes(rig, ch, n * 128, 2);
    CHECK(out.echo_ok[0]);
    CHECK(out.echo_ok[1]);
  }
}
