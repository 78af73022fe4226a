#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cohbench::verify {

struct ExploreOptions {
  bool hazard = false;          // one transaction unit, capacity one
  int epochs = 2;               // exchanges driven per execution
  bool exclusive_return = true;
  std::uint64_t max_states = 200000;
};

struct ExploreReport {
  std::uint64_t states = 0;       // distinct reachable states
  std::uint64_t transitions = 0;
  std::uint64_t terminals = 0;    // completed executions
  std::uint64_t deadlocks = 0;    // stuck states: nothing runnable, not done
  bool swmr_violation = false;
  bool swap_violation = false;
  bool protocol_fault = false;
  std::string note;               // first violation / deadlock描述
  std::string deadlock_example;   // action labels along one stuck path

  bool clean() const {
    return deadlocks == 0 && !swmr_violation && !swap_violation &&
           !protocol_fault;
  }
};

// Exhaustively enumerates every interleaving of link deliveries and device
// actions for the single-pair bidirectional protocol, deduplicating states.
// Timing watchdogs (retry guards, fault deadlines) are masked: they cannot
// fire before the transfers they guard under any real timing.
ExploreReport explore_invoke_protocol(const ExploreOptions& options);

}  // namespace cohbench::verify
