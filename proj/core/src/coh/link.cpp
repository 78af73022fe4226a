#include "cohbench/coh/link.hpp"

#include <cassert>
#include <utility>

namespace cohbench::coh {

const char* to_string(CacheLineState s) {
  switch (s) {
    case CacheLineState::Invalid: return "I";
    case CacheLineState::Shared: return "S";
    case CacheLineState::Exclusive: return "E";
    case CacheLineState::Modified: return "M";
    case CacheLineState::Owned: return "O";
  }
  return "?";
}

std::string to_string(const LineId& line) {
  return "n" + std::to_string(line.home) + ":" + std::to_string(line.index);
}

const char* to_string(MsgKind k) {
  switch (k) {
    case MsgKind::ReqShared: return "ReqShared";
    case MsgKind::ReqExclusive: return "ReqExclusive";
    case MsgKind::ReqUpgrade: return "ReqUpgrade";
    case MsgKind::InvalidateToInvalid: return "InvalidateToInvalid";
    case MsgKind::DowngradeToShared: return "DowngradeToShared";
    case MsgKind::RespData: return "RespData";
    case MsgKind::RespAck: return "RespAck";
    case MsgKind::RetryLater: return "RetryLater";
    case MsgKind::WriteBack: return "WriteBack";
  }
  return "?";
}

std::string TraceRecord::to_line() const {
  std::string out;
  out += std::to_string(time);
  out += ',';
  out += src;
  out += ',';
  out += dst;
  out += ',';
  out += to_string(kind);
  out += ',';
  out += to_string(line);
  out += ',';
  out += state;
  return out;
}

void TraceHasher::on_trace(const TraceRecord& r) {
  for (char c : r.to_line()) {
    hash_ ^= static_cast<std::uint8_t>(c);
    hash_ *= 1099511628211ull;
  }
  hash_ ^= static_cast<std::uint8_t>('\n');
  hash_ *= 1099511628211ull;
}

void Link::attach(NodeId node, std::string label, MessageHandler& handler) {
  endpoints_[node] = Endpoint{std::move(label), &handler};
}

void Link::send(NodeId src, NodeId dst, Message m) {
  auto it = endpoints_.find(dst);
  assert(it != endpoints_.end() && "message to unattached node");
  Endpoint& ep = it->second;
  m.src = src;

  sim::SimTime delay = params_.one_way_ns;
  if (params_.reorder && params_.reorder_window > 1) {
    delay += sched_.rng().below(params_.reorder_window);
  }
  if (params_.jitter_span_ns > 0) {
    delay += sched_.rng().below(params_.jitter_span_ns + 1);
  }

  sched_.note_link_send();
  std::string src_label = endpoints_.count(src) ? endpoints_[src].label
                                                : std::to_string(src);
  std::string label = std::string("deliver:") + to_string(m.kind) + ":" +
                      to_string(m.line) + ":" + src_label + ">" + ep.label;
  MessageHandler* handler = ep.handler;
  sched_.schedule(
      delay,
      [this, m, handler, src_label, dst]() {
        sched_.note_link_delivery();
        if (trace_ != nullptr) {
          TraceRecord r;
          r.time = sched_.now();
          r.src = src_label;
          r.dst = endpoints_[dst].label;
          r.kind = m.kind;
          r.line = m.line;
          r.state = m.granted ? to_string(*m.granted) : "-";
          trace_->on_trace(r);
        }
        handler->on_message(m);
      },
      sim::EventClass::Normal, std::move(label));
}

}  // namespace cohbench::coh
