#include <doctest.h>

#include <vector>

#include "cohbench/sim/engine.hpp"

using cohbench::sim::Engine;
using cohbench::sim::kNoLimit;
using cohbench::sim::Rng;
using cohbench::sim::SimOverflowError;
using cohbench::sim::SimTime;

TEST_CASE("events fire at now plus delay") {
  Engine eng;
  SimTime fired_at = 0;
  eng.schedule(150, [&] { fired_at = eng.now(); });
  auto stats = eng.run_until_quiescent();
  CHECK(fired_at == 150);
  CHECK(stats.events_processed == 1);
  CHECK(stats.wall_clock_end == 150);
}

TEST_CASE("equal timestamps run in insertion order") {
  Engine eng;
  std::vector<int> order;
  eng.schedule(10, [&] { order.push_back(1); });
  eng.schedule(10, [&] { order.push_back(2); });
  eng.schedule(5, [&] { order.push_back(0); });
  eng.run_until_quiescent();
  CHECK(order == std::vector<int>{0, 1, 2});
}

TEST_CASE("zero-delay events run after the current event completes") {
  Engine eng;
  std::vector<int> order;
  eng.schedule(900, [&] {
    order.push_back(1);
    eng.schedule(0, [&] { order.push_back(3); });
    order.push_back(2);
  });
  eng.run_until_quiescent();
  CHECK(eng.now() == 900);
  CHECK(order == std::vector<int>{1, 2, 3});
}

TEST_CASE("zero-delay events still queue behind earlier same-time events") {
  Engine eng;
  std::vector<int> order;
  eng.schedule(10, [&] {
    order.push_back(1);
    eng.schedule(0, [&] { order.push_back(3); });
  });
  eng.schedule(10, [&] { order.push_back(2); });
  eng.run_until_quiescent();
  CHECK(order == std::vector<int>{1, 2, 3});
}

TEST_CASE("empty queue is immediately quiescent") {
  Engine eng;
  auto stats = eng.run_until_quiescent();
  CHECK(stats.events_processed == 0);
  CHECK(stats.wall_clock_end == 0);
  CHECK_FALSE(stats.stalled);
}

TEST_CASE("clock overflow is a fatal configuration error") {
  Engine eng;
  CHECK_THROWS_AS(eng.schedule(kNoLimit, [] {}), SimOverflowError);
}

TEST_CASE("run limit with queued work sets the stalled flag") {
  Engine eng;
  bool late_ran = false;
  eng.schedule(100, [&] { eng.schedule(10'000'000, [&] { late_ran = true; }); });
  auto stats = eng.run_until_quiescent(1'000'000);
  CHECK(stats.stalled);
  CHECK_FALSE(late_ran);
  CHECK(stats.events_processed == 1);
}

TEST_CASE("counters only increase across a run") {
  Engine eng;
  std::uint64_t last = 0;
  bool monotone = true;
  for (int i = 0; i < 50; ++i) {
    eng.schedule(static_cast<SimTime>(i), [&] {
      const std::uint64_t seen = eng.stats().events_processed;
      if (seen < last) monotone = false;
      last = seen;
    });
  }
  eng.run_until_quiescent();
  CHECK(monotone);
}

TEST_CASE("seeded generator is reproducible and platform independent") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next() == b.next());
  }
  Rng c(42);
  // First few values pinned: the sequence is part of determinism guarantees.
  CHECK(c.next() == 0xbdd732262feb6e95ull);
}
