#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "cohbench/coh/message.hpp"
#include "cohbench/sim/scheduler.hpp"

namespace cohbench::coh {

struct MessageHandler {
  virtual ~MessageHandler() = default;
  virtual void on_message(const Message& m) = 0;
};

// One delivered message, for the line-oriented text trace.
struct TraceRecord {
  sim::SimTime time = 0;
  std::string src;
  std::string dst;
  MsgKind kind{};
  LineId line{};
  std::string state;  // granted state or "-"

  std::string to_line() const;  // "time,src,dst,kind,line,state"
};

struct TraceSink {
  virtual ~TraceSink() = default;
  virtual void on_trace(const TraceRecord& r) = 0;
};

// FNV-1a hash over trace lines; the cheap determinism witness.
class TraceHasher final : public TraceSink {
 public:
  void on_trace(const TraceRecord& r) override;
  std::uint64_t digest() const { return hash_; }

 private:
  std::uint64_t hash_ = 1469598103934665603ull;
};

struct LinkParams {
  sim::SimTime one_way_ns = 150;
  bool reorder = false;           // bounded reordering of same-tick messages
  std::uint32_t reorder_window = 4;
  sim::SimTime jitter_span_ns = 0;  // extra per-message noise when nonzero
};

// Point-to-point interconnect between nodes. FIFO per direction by default;
// with reordering enabled, delivery may be perturbed within the window.
class Link {
 public:
  Link(sim::Scheduler& sched, LinkParams params) : sched_(sched), params_(params) {}

  void attach(NodeId node, std::string label, MessageHandler& handler);
  void set_trace(TraceSink* sink) { trace_ = sink; }

  void send(NodeId src, NodeId dst, Message m);

  const LinkParams& params() const { return params_; }

 private:
  struct Endpoint {
    std::string label;
    MessageHandler* handler = nullptr;
  };

  sim::Scheduler& sched_;
  LinkParams params_;
  std::map<NodeId, Endpoint> endpoints_;
  TraceSink* trace_ = nullptr;
};

}  // namespace cohbench::coh
