#include "cohbench/coh/directory.hpp"

#include <algorithm>
#include <cassert>

#include "cohbench/coh/cpu_cache.hpp"

namespace cohbench::coh {

Directory::Directory(sim::Scheduler& sched, Link& link, NodeId self,
                     DirParams params, HomeLogic* logic)
    : sched_(sched), link_(link), self_(self), params_(params), logic_(logic) {
  tads_.resize(params_.tad_count == 0 ? 1 : params_.tad_count);
}

void Directory::define_line(const LineId& line, LineData init) {
  if (line.home != self_) {
    throw ProtocolError("define_line: line not homed at this node");
  }
  HomeLine hl;
  hl.data = std::move(init);
  lines_.emplace(line, std::move(hl));
}

void Directory::seed_owner(const LineId& line, NodeId node,
                           CacheLineState st) {
  HomeLine& hl = line_at(line);
  if (st == CacheLineState::Shared) {
    hl.sharers.insert(node);
    return;
  }
  hl.owner = node;
  hl.owner_state = st;
}

Directory::HomeLine& Directory::line_at(const LineId& line) {
  auto it = lines_.find(line);
  if (it == lines_.end()) {
    throw ProtocolError("directory: message for unknown line " +
                        to_string(line));
  }
  return it->second;
}

const Directory::HomeLine& Directory::line_at(const LineId& line) const {
  auto it = lines_.find(line);
  if (it == lines_.end()) {
    throw ProtocolError("directory: unknown line " + to_string(line));
  }
  return it->second;
}

bool Directory::home_copy_current(const HomeLine& hl) const {
  if (!hl.owner) return true;
  // Exclusive may have been silently upgraded to Modified, so any E/M owner
  // means the home copy cannot be trusted. Owned implies the last downgrade
  // already returned the dirty data.
  return hl.owner_state == CacheLineState::Owned;
}

void Directory::on_message(const Message& m) {
  switch (m.kind) {
    case MsgKind::ReqShared:
    case MsgKind::ReqExclusive:
    case MsgKind::ReqUpgrade: {
      line_at(m.line);  // fault on unknown lines before creating state
      const std::uint64_t id = next_txn_++;
      Txn t;
      t.id = id;
      t.type = TxnType::Remote;
      t.line = m.line;
      t.req = m;
      t.arrived = sched_.now();
      txns_.emplace(id, std::move(t));
      submit(id);
      return;
    }
    case MsgKind::WriteBack:
    case MsgKind::RespAck: {
      HomeLine& hl = line_at(m.line);
      // Reply to one of our recalls?
      auto it = txns_.find(m.txn);
      if (it != txns_.end() && it->second.type == TxnType::Pull) {
        finish_pull(it->second, m.data ? &*m.data : nullptr);
        return;
      }
      if (m.kind == MsgKind::RespAck) {
        throw ProtocolError("directory: stray ack for line " +
                            to_string(m.line));
      }
      // Unsolicited writeback (eviction notice). Dirty data refreshes the
      // home copy; either way the holder is gone.
      if (m.data) hl.data = *m.data;
      if (hl.owner && *hl.owner == m.src) {
        hl.owner.reset();
        hl.owner_state = CacheLineState::Invalid;
      }
      hl.sharers.erase(m.src);
      return;
    }
    default:
      throw ProtocolError(std::string("directory: unexpected message ") +
                          to_string(m.kind) + " for line " + to_string(m.line));
  }
}

void Directory::submit(std::uint64_t txn) {
  Txn& t = txns_.at(txn);
  HomeLine& hl = line_at(t.line);
  if (hl.active != 0) {
    hl.waiting.push_back(txn);
    ++stats_.line_queued;
    return;
  }
  try_admit(txn);
}

void Directory::try_admit(std::uint64_t txn) {
  Txn& t = txns_.at(txn);
  HomeLine& hl = line_at(t.line);
  TadUnit& unit = tads_[tad_of(t.line, params_.tad_count)];
  if (unit.in_flight >= params_.tad_capacity) {
    unit.waiting.push_back(txn);
    ++stats_.unit_queued;
    return;
  }
  ++unit.in_flight;
  stats_.peak_unit_in_flight =
      std::max(stats_.peak_unit_in_flight, unit.in_flight);
  ++stats_.admitted;
  hl.active = txn;
  sched_.schedule(
      params_.proc_ns, [this, txn] { process(txn); }, sim::EventClass::Normal,
      "dirproc:" + to_string(t.line));
}

void Directory::process(std::uint64_t txn) {
  Txn& t = txns_.at(txn);
  if (t.type == TxnType::Pull) {
    process_pull(t);
    return;
  }
  if (logic_ != nullptr && logic_->owns(t.line)) {
    DeviceAction action = logic_->on_request(txn, t.req);
    for (auto& [line, kind] : action.pulls) {
      start_pull(line, kind);
    }
    if (action.respond) {
      do_respond(txn, *action.respond);
    } else if (action.defer) {
      t.deferred = true;
      arm_guard(txn);
    } else {
      throw ProtocolError("device logic neither responded nor deferred for " +
                          to_string(t.line));
    }
    return;
  }
  process_remote_default(t);
}

void Directory::process_remote_default(Txn& t) {
  HomeLine& hl = line_at(t.line);
  const NodeId requester = t.req.src;
  const std::uint64_t txn = t.id;

  auto after_pulls = [this, txn] {
    Txn& t2 = txns_.at(txn);
    if (--t2.pulls_outstanding > 0) return;
    HomeLine& hl2 = line_at(t2.line);
    RespondSpec spec;
    switch (t2.req.kind) {
      case MsgKind::ReqShared:
        spec.granted = CacheLineState::Shared;
        spec.data = hl2.data;
        break;
      case MsgKind::ReqExclusive:
        spec.granted = CacheLineState::Exclusive;
        spec.data = hl2.data;
        break;
      case MsgKind::ReqUpgrade:
        spec.ack = true;
        break;
      default:
        throw ProtocolError("bad request kind");
    }
    do_respond(txn, spec);
  };

  // Recalls needed before this request can be answered.
  std::vector<std::pair<LineId, PullKind>> pulls;
  switch (t.req.kind) {
    case MsgKind::ReqShared:
      if (hl.owner && *hl.owner != requester && !home_copy_current(hl)) {
        pulls.emplace_back(t.line, PullKind::DowngradeFetch);
      }
      break;
    case MsgKind::ReqExclusive:
    case MsgKind::ReqUpgrade:
      if (hl.owner && *hl.owner != requester) {
        pulls.emplace_back(t.line, PullKind::InvalidateFetch);
      }
      for (NodeId s : hl.sharers) {
        if (s != requester) pulls.emplace_back(t.line, PullKind::InvalidateClean);
      }
      if (hl.local_cached && local_cache_ != nullptr) {
        local_cache_->local_invalidate(t.line);
        hl.local_cached = false;
      }
      break;
    default:
      throw ProtocolError("bad request kind");
  }

  if (pulls.empty()) {
    t.pulls_outstanding = 1;
    after_pulls();
    return;
  }
  // The active slot belongs to this transaction; the chained recalls run as
  // dependent transactions on the same line, so they bypass the per-line
  // serialization by construction (the line is busy with us).
  t.pulls_outstanding = static_cast<int>(pulls.size());
  for (auto& [line, kind] : pulls) {
    Txn p;
    p.id = next_txn_++;
    p.type = TxnType::Pull;
    p.line = line;
    p.pull_kind = kind;
    p.pull_done = [after_pulls](const LineData*) { after_pulls(); };
    const std::uint64_t pid = p.id;
    txns_.emplace(pid, std::move(p));
    // Dependent recall: shares the already-held line slot, but still needs a
    // unit slot of its own.
    TadUnit& unit = tads_[tad_of(line, params_.tad_count)];
    if (unit.in_flight >= params_.tad_capacity) {
      unit.waiting.push_back(pid);
      ++stats_.unit_queued;
    } else {
      ++unit.in_flight;
      stats_.peak_unit_in_flight =
          std::max(stats_.peak_unit_in_flight, unit.in_flight);
      sched_.schedule(
          params_.proc_ns, [this, pid] { process(pid); },
          sim::EventClass::Normal, "dirproc:pull");
    }
  }
}

std::uint64_t Directory::start_pull(const LineId& line, PullKind kind,
                                    std::function<void(const LineData*)> done) {
  line_at(line);
  Txn t;
  t.id = next_txn_++;
  t.type = TxnType::Pull;
  t.line = line;
  t.pull_kind = kind;
  t.pull_done = std::move(done);
  const std::uint64_t id = t.id;
  txns_.emplace(id, std::move(t));
  submit(id);
  return id;
}

void Directory::process_pull(Txn& t) {
  HomeLine& hl = line_at(t.line);
  std::optional<NodeId> target;
  if (hl.owner) {
    target = hl.owner;
  } else if (!hl.sharers.empty()) {
    target = *hl.sharers.begin();
  }
  if (hl.local_cached && local_cache_ != nullptr &&
      (t.pull_kind != PullKind::DowngradeFetch)) {
    local_cache_->local_invalidate(t.line);
    hl.local_cached = false;
  }
  if (!target) {
    // Nothing cached remotely; the home copy is already the truth.
    finish_pull(t, nullptr);
    return;
  }
  Message m;
  m.kind = t.pull_kind == PullKind::DowngradeFetch
               ? MsgKind::DowngradeToShared
               : MsgKind::InvalidateToInvalid;
  m.line = t.line;
  m.txn = t.id;
  link_.send(self_, *target, std::move(m));
}

void Directory::finish_pull(Txn& t, const LineData* data) {
  HomeLine& hl = line_at(t.line);
  if (data != nullptr) hl.data = *data;
  if (t.pull_kind == PullKind::DowngradeFetch) {
    if (hl.owner) hl.owner_state = CacheLineState::Owned;
  } else {
    if (hl.owner) {
      hl.owner.reset();
      hl.owner_state = CacheLineState::Invalid;
    }
    if (!hl.sharers.empty()) hl.sharers.clear();
  }
  // complete() destroys the transaction record.
  const LineId line = t.line;
  auto done = std::move(t.pull_done);
  complete(t.id);
  if (done) done(data);
  if (logic_ != nullptr && logic_->owns(line)) {
    logic_->on_pull_done(line, data);
  }
}

void Directory::do_respond(std::uint64_t txn, RespondSpec spec) {
  Txn& t = txns_.at(txn);
  sim::SimTime ready = sched_.now() + spec.extra_ns;
  sim::SimTime depart = ready;
  if (spec.pace_ns > 0) {
    depart = std::max(ready, pipe_next_free_);
    pipe_next_free_ = depart + spec.pace_ns;
  }
  sched_.schedule(
      depart - sched_.now(),
      [this, txn, spec] {
        Txn& t2 = txns_.at(txn);
        HomeLine& hl = line_at(t2.line);
        const NodeId requester = t2.req.src;
        Message m;
        m.line = t2.line;
        m.txn = t2.req.txn;
        if (spec.ack) {
          m.kind = MsgKind::RespAck;
          hl.owner = requester;
          hl.owner_state = CacheLineState::Modified;
          hl.sharers.erase(requester);
        } else {
          m.kind = MsgKind::RespData;
          m.granted = spec.granted;
          m.data = spec.data ? spec.data : std::optional<LineData>(hl.data);
          if (spec.granted == CacheLineState::Exclusive) {
            hl.owner = requester;
            hl.owner_state = CacheLineState::Exclusive;
            hl.sharers.erase(requester);
          } else {
            hl.sharers.insert(requester);
          }
        }
        link_.send(self_, requester, std::move(m));
        complete(txn);
      },
      sim::EventClass::Normal, "respond:" + to_string(t.line));
}

void Directory::arm_guard(std::uint64_t txn) {
  Txn& t = txns_.at(txn);
  const sim::SimTime fire_at = t.arrived + params_.guard.retry_after();
  const sim::SimTime delay = fire_at > sched_.now() ? fire_at - sched_.now() : 0;
  sched_.schedule(
      delay,
      [this, txn] {
        auto it = txns_.find(txn);
        if (it == txns_.end() || !it->second.deferred) return;
        Txn& t2 = it->second;
        Message m;
        m.kind = MsgKind::RetryLater;
        m.line = t2.line;
        m.txn = t2.req.txn;
        link_.send(self_, t2.req.src, std::move(m));
        ++stats_.retries_sent;
        const Message req = t2.req;
        const LineId line = t2.line;
        complete(txn);
        if (logic_ != nullptr && logic_->owns(line)) {
          logic_->on_retry_sent(line, req);
        }
      },
      sim::EventClass::Guard, "retry-guard:" + to_string(t.line));
}

void Directory::respond_deferred(std::uint64_t home_txn, RespondSpec spec) {
  Txn& t = txns_.at(home_txn);
  if (!t.deferred) {
    throw ProtocolError("respond_deferred: transaction not deferred");
  }
  t.deferred = false;
  do_respond(home_txn, spec);
}

void Directory::complete(std::uint64_t txn) {
  Txn& t = txns_.at(txn);
  HomeLine& hl = line_at(t.line);
  TadUnit& unit = tads_[tad_of(t.line, params_.tad_count)];
  assert(unit.in_flight > 0);
  --unit.in_flight;
  if (hl.active == txn) {
    hl.active = 0;
    if (!hl.waiting.empty()) {
      std::uint64_t next = hl.waiting.front();
      hl.waiting.pop_front();
      try_admit(next);
    }
  }
  txns_.erase(txn);
  if (hl.active == 0 && !hl.local_waiters.empty()) {
    std::vector<std::function<void()>> waiters;
    waiters.swap(hl.local_waiters);
    for (auto& w : waiters) w();
  }
  // Hand freed unit slots to queued transactions whose line is free.
  while (unit.in_flight < params_.tad_capacity && !unit.waiting.empty()) {
    std::uint64_t next = unit.waiting.front();
    unit.waiting.pop_front();
    Txn& nt = txns_.at(next);
    HomeLine& nl = line_at(nt.line);
    if (nt.type == TxnType::Remote && nl.active != 0) {
      nl.waiting.push_back(next);
      ++stats_.line_queued;
      continue;
    }
    ++unit.in_flight;
    stats_.peak_unit_in_flight =
        std::max(stats_.peak_unit_in_flight, unit.in_flight);
    ++stats_.admitted;
    if (nt.type == TxnType::Remote) nl.active = next;
    sched_.schedule(
        params_.proc_ns, [this, next] { process(next); },
        sim::EventClass::Normal, "dirproc:queued");
  }
}

void Directory::local_load(const LineId& line,
                           std::function<void(const LineData&)> done) {
  HomeLine& hl = line_at(line);
  if (hl.active != 0 || !hl.waiting.empty()) {
    // The line is mid-transaction; reading now could recache a copy that is
    // being handed to another node. Wait like any other requester.
    hl.local_waiters.push_back(
        [this, line, done = std::move(done)]() mutable {
          local_load(line, std::move(done));
        });
    return;
  }
  if (home_copy_current(hl)) {
    hl.local_cached = true;
    done(hl.data);
    return;
  }
  start_pull(line, PullKind::DowngradeFetch,
             [this, line, done = std::move(done)](const LineData*) {
               HomeLine& hl2 = line_at(line);
               hl2.local_cached = true;
               done(hl2.data);
             });
}

void Directory::local_store_grant(const LineId& line,
                                  std::function<void()> done) {
  HomeLine& hl = line_at(line);
  if (hl.active != 0 || !hl.waiting.empty()) {
    hl.local_waiters.push_back(
        [this, line, done = std::move(done)]() mutable {
          local_store_grant(line, std::move(done));
        });
    return;
  }
  if (!hl.owner && hl.sharers.empty()) {
    done();
    return;
  }
  start_pull(line, PullKind::InvalidateFetch,
             [done = std::move(done)](const LineData*) { done(); });
}

Directory::EntryView Directory::entry(const LineId& line) const {
  const HomeLine& hl = line_at(line);
  EntryView v;
  v.owner = hl.owner;
  v.owner_state = hl.owner_state;
  v.sharers.assign(hl.sharers.begin(), hl.sharers.end());
  v.local_cached = hl.local_cached;
  v.busy = hl.active != 0 || !hl.waiting.empty();
  return v;
}

const LineData& Directory::home_data(const LineId& line) const {
  return line_at(line).data;
}

void Directory::encode(std::string& out) const {
  out += "D[";
  for (const auto& [line, hl] : lines_) {
    out += to_string(line);
    out += hl.owner ? ("o" + std::to_string(*hl.owner)) : "o-";
    out += to_string(hl.owner_state);
    out += 's';
    for (NodeId s : hl.sharers) out += std::to_string(s);
    out += hl.local_cached ? "L" : "-";
    out += hl.active != 0 ? "B" : "-";
    out += 'w';
    out += std::to_string(hl.waiting.size());
    out += ';';
  }
  out += "|T";
  for (const auto& unit : tads_) {
    out += std::to_string(unit.in_flight);
    out += '.';
    out += std::to_string(unit.waiting.size());
    out += ';';
  }
  out += "|X";
  for (const auto& [id, t] : txns_) {
    out += t.type == TxnType::Remote ? 'r' : 'p';
    out += to_string(t.req.kind);
    out += to_string(t.line);
    out += t.deferred ? "d" : "-";
    out += ';';
  }
  out += ']';
}

}  // namespace cohbench::coh
