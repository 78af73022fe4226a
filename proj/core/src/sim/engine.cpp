#include "cohbench/sim/engine.hpp"

#include <cassert>
#include <utility>

namespace cohbench::sim {

std::uint64_t Engine::schedule(SimTime delay, std::function<void()> fn,
                               EventClass cls, std::string label) {
  (void)label;
  if (delay >= kNoLimit - now_) {
    throw SimOverflowError("simulated clock would overflow");
  }
  const std::uint64_t seq = next_seq_++;
  queue_.push(Event{now_ + delay, seq, cls, std::move(fn)});
  return seq;
}

RunStats Engine::run_until_quiescent(SimTime limit) {
  stats_.stalled = false;
  while (!queue_.empty()) {
    const Event& top = queue_.top();
    if (top.at > limit) {
      stats_.stalled = true;
      break;
    }
    assert(top.at >= now_ && "clock must be monotone");
    // Comparator only looks at (at, seq); moving fn out before pop is safe.
    Event ev{top.at, top.seq, top.cls,
             std::move(const_cast<Event&>(top).fn)};
    queue_.pop();
    now_ = ev.at;
    ++stats_.events_processed;
    ev.fn();
    if (post_event_) post_event_();
  }
  stats_.wall_clock_end = now_;
  return stats_;
}

}  // namespace cohbench::sim
