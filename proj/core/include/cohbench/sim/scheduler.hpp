#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "cohbench/sim/rng.hpp"

namespace cohbench::sim {

// Virtual time in nanoseconds.
using SimTime = std::uint64_t;

// Guard events are watchdog-style timers (retry guards, fault deadlines).
// They are meaningful under real timing only; the interleaving explorer
// masks them.
enum class EventClass { Normal, Guard };

// Scheduling surface shared by the timed engine and the interleaving
// explorer. Protocol components only talk to this interface, which keeps
// them usable both for latency simulation and for exhaustive state
// exploration.
class Scheduler {
 public:
  virtual ~Scheduler() = default;

  virtual SimTime now() const = 0;

  // Runs fn at now()+delay. Events with equal firing time run in scheduling
  // order. The label describes the action for trace/exploration purposes.
  virtual std::uint64_t schedule(SimTime delay, std::function<void()> fn,
                                 EventClass cls = EventClass::Normal,
                                 std::string label = {}) = 0;

  virtual Rng& rng() = 0;

  // Simulated machine-check style failure: recorded, not thrown.
  virtual void raise_fault(std::string what) = 0;

  // Link accounting hooks.
  virtual void note_link_send() = 0;
  virtual void note_link_delivery() = 0;
};

}  // namespace cohbench::sim
