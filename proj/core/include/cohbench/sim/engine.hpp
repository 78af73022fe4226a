#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "cohbench/sim/scheduler.hpp"

namespace cohbench::sim {

inline constexpr SimTime kNoLimit = ~SimTime{0};

// Per-run counters. Counters only increase while a run is in progress.
struct RunStats {
  std::uint64_t events_processed = 0;
  std::uint64_t messages_on_link = 0;
  std::uint64_t one_way_traversals = 0;
  SimTime wall_clock_end = 0;
  bool stalled = false;  // run limit hit with events still queued
  bool faulted = false;  // a simulated fault (e.g. machine check) fired
};

class SimOverflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic discrete-event engine. Events fire in (fire_at, seq) order;
// ties at the same timestamp are FIFO by insertion. One engine instance is
// strictly single-threaded; independent instances may run concurrently.
class Engine final : public Scheduler {
 public:
  explicit Engine(std::uint64_t seed = 0) : rng_(seed) {}

  SimTime now() const override { return now_; }
  Rng& rng() override { return rng_; }

  std::uint64_t schedule(SimTime delay, std::function<void()> fn,
                         EventClass cls = EventClass::Normal,
                         std::string label = {}) override;

  // Processes events until the queue drains or `limit` is reached. A limit
  // hit with work still queued sets the `stalled` flag (used as the cheap
  // stall/deadlock detector).
  RunStats run_until_quiescent(SimTime limit = kNoLimit);

  void raise_fault(std::string what) override {
    stats_.faulted = true;
    if (fault_.empty()) fault_ = std::move(what);
  }
  bool faulted() const { return stats_.faulted; }
  const std::string& fault_message() const { return fault_; }

  void note_link_send() override { ++stats_.messages_on_link; }
  void note_link_delivery() override { ++stats_.one_way_traversals; }

  // Live view of the counters (they keep accumulating across runs).
  const RunStats& stats() const { return stats_; }

  bool empty() const { return queue_.empty(); }

  // Invoked after every processed event; used by invariant audits.
  void set_post_event(std::function<void()> fn) { post_event_ = std::move(fn); }

 private:
  struct Event {
    SimTime at;
    std::uint64_t seq;
    EventClass cls;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  SimTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  RunStats stats_;
  std::string fault_;
  Rng rng_;
  std::function<void()> post_event_;
};

}  // namespace cohbench::sim
