#include "cohbench/coh/cpu_cache.hpp"

#include <algorithm>
#include <cassert>

#include "cohbench/coh/directory.hpp"

namespace cohbench::coh {

CpuCacheModel::CpuCacheModel(sim::Scheduler& sched, Link& link, NodeId self,
                             CacheParams params)
    : sched_(sched), link_(link), self_(self), params_(params) {}

CpuCacheModel::Entry* CpuCacheModel::find(const LineId& line) {
  auto it = lines_.find(line);
  return it == lines_.end() ? nullptr : &it->second;
}

const CpuCacheModel::Entry* CpuCacheModel::find(const LineId& line) const {
  auto it = lines_.find(line);
  return it == lines_.end() ? nullptr : &it->second;
}

CacheLineState CpuCacheModel::line_state(const LineId& line) const {
  const Entry* e = find(line);
  return e == nullptr ? CacheLineState::Invalid : e->st;
}

const LineData* CpuCacheModel::line_data(const LineId& line) const {
  const Entry* e = find(line);
  return e == nullptr ? nullptr : &e->data;
}

void CpuCacheModel::store(const LineId& line, LineData data) {
  for (auto& [l, d] : write_buffer_) {
    if (l == line) {  // coalesce: newest store wins
      d = std::move(data);
      return;
    }
  }
  write_buffer_.emplace_back(line, std::move(data));
}

void CpuCacheModel::barrier(std::function<void()> on_drained) {
  flush_write_buffer();
  if (unretired_stores_ == 0) {
    on_drained();
    return;
  }
  barrier_waiters_.push_back(std::move(on_drained));
}

void CpuCacheModel::retire_one() {
  assert(unretired_stores_ > 0);
  if (--unretired_stores_ == 0) {
    std::vector<std::function<void()>> waiters;
    waiters.swap(barrier_waiters_);
    for (auto& w : waiters) w();
  }
}

void CpuCacheModel::flush_write_buffer() {
  std::vector<std::pair<LineId, LineData>> buffered;
  buffered.swap(write_buffer_);
  for (auto& [line, data] : buffered) {
    drain_store(line, std::move(data));
  }
}

void CpuCacheModel::drain_store(const LineId& line, LineData data) {
  if (auto pit = pending_.find(line); pit != pending_.end()) {
    pit->second.wants_write = true;
    pit->second.store_data = std::move(data);
    ++unretired_stores_;
    return;
  }
  Entry* e = find(line);
  if (e != nullptr && e->st == CacheLineState::Modified) {
    e->data = std::move(data);
    touch(*e);
    return;
  }
  if (e != nullptr && e->st == CacheLineState::Exclusive) {
    // Silent upgrade: no interconnect traffic for an exclusive holder.
    e->st = CacheLineState::Modified;
    e->data = std::move(data);
    touch(*e);
    return;
  }
  ++unretired_stores_;
  if (line.home == self_ && local_home_ != nullptr) {
    local_home_->local_store_grant(line, [this, line, data]() mutable {
      install(line, CacheLineState::Modified, std::move(data));
      retire_one();
    });
    return;
  }
  Pending p;
  p.wants_write = true;
  p.store_data = std::move(data);
  const bool upgrade =
      e != nullptr && (e->st == CacheLineState::Shared ||
                       e->st == CacheLineState::Owned);
  start_request(line, upgrade ? MsgKind::ReqUpgrade : MsgKind::ReqExclusive,
                std::move(p));
}

void CpuCacheModel::load(const LineId& line,
                         std::function<void(const LineData&)> on_data) {
  flush_write_buffer();
  if (auto pit = pending_.find(line); pit != pending_.end()) {
    pit->second.waiters.push_back(std::move(on_data));
    if (!pit->second.blocking) {
      pit->second.blocking = true;
      arm_deadline(line);
    }
    return;
  }
  if (Entry* e = find(line); e != nullptr && is_valid(e->st)) {
    touch(*e);
    on_data(e->data);
    return;
  }
  if (line.home == self_ && local_home_ != nullptr) {
    local_home_->local_load(line, [this, line,
                                   on_data = std::move(on_data)](
                                      const LineData& d) {
      install(line, CacheLineState::Shared, d);
      on_data(d);
    });
    return;
  }
  Pending p;
  p.waiters.push_back(std::move(on_data));
  p.blocking = true;
  start_request(line, MsgKind::ReqShared, std::move(p));
}

void CpuCacheModel::prefetch(const LineId& line, CacheLineState want) {
  flush_write_buffer();
  if (pending_.count(line) != 0) return;
  Entry* e = find(line);
  if (e != nullptr && is_valid(e->st)) {
    if (want == CacheLineState::Shared || is_writable(e->st)) return;
  }
  if (line.home == self_ && local_home_ != nullptr) {
    local_home_->local_load(line, [this, line](const LineData& d) {
      install(line, CacheLineState::Shared, d);
    });
    return;
  }
  MsgKind kind = MsgKind::ReqShared;
  if (want == CacheLineState::Exclusive) {
    const bool held_shared =
        e != nullptr && (e->st == CacheLineState::Shared ||
                         e->st == CacheLineState::Owned);
    kind = held_shared ? MsgKind::ReqUpgrade : MsgKind::ReqExclusive;
  }
  start_request(line, kind, Pending{});
}

void CpuCacheModel::start_request(const LineId& line, MsgKind kind,
                                  Pending pending) {
  pending.req_kind = kind;
  pending.txn = next_txn_++;
  pending.deadline = sched_.now() + params_.timeout_ns;
  Message m;
  m.kind = kind;
  m.line = line;
  m.txn = pending.txn;
  const bool blocking = pending.blocking;
  pending_.emplace(line, std::move(pending));
  link_.send(self_, line.home, std::move(m));
  if (blocking) arm_deadline(line);
}

void CpuCacheModel::arm_deadline(const LineId& line) {
  auto it = pending_.find(line);
  if (it == pending_.end()) return;
  const std::uint64_t txn = it->second.txn;
  const sim::SimTime deadline = it->second.deadline;
  const sim::SimTime delay =
      deadline > sched_.now() ? deadline - sched_.now() : 0;
  sched_.schedule(
      delay,
      [this, line, txn] {
        auto it2 = pending_.find(line);
        if (it2 == pending_.end() || it2->second.txn != txn) return;
        if (sched_.now() < it2->second.deadline) return;
        sched_.raise_fault("machine check: request for line " +
                           to_string(line) + " timed out");
      },
      sim::EventClass::Guard, "mcheck:" + to_string(line));
}

void CpuCacheModel::install(const LineId& line, CacheLineState st,
                            LineData data) {
  Entry& e = lines_[line];
  e.st = st;
  e.data = std::move(data);
  touch(e);
  evict_if_needed(line);
}

void CpuCacheModel::evict_if_needed(const LineId& just_installed) {
  const std::uint32_t cap = params_.capacity_lines();
  while (lines_.size() > cap) {
    auto victim = lines_.end();
    for (auto it = lines_.begin(); it != lines_.end(); ++it) {
      if (it->first == just_installed) continue;
      if (pending_.count(it->first) != 0) continue;
      if (victim == lines_.end() || it->second.lru < victim->second.lru) {
        victim = it;
      }
    }
    if (victim == lines_.end()) return;
    const LineId line = victim->first;
    Message m;
    m.kind = MsgKind::WriteBack;
    m.line = line;
    m.txn = 0;  // unsolicited eviction notice
    if (is_dirty(victim->second.st)) m.data = std::move(victim->second.data);
    lines_.erase(victim);
    if (line.home == self_) continue;  // local home already has the truth
    link_.send(self_, line.home, std::move(m));
  }
}

void CpuCacheModel::local_install(const LineId& line, CacheLineState st,
                                  LineData data) {
  install(line, st, std::move(data));
}

void CpuCacheModel::local_invalidate(const LineId& line) {
  lines_.erase(line);
}

void CpuCacheModel::on_message(const Message& m) {
  switch (m.kind) {
    case MsgKind::RespData: {
      auto it = pending_.find(m.line);
      if (it == pending_.end() || it->second.txn != m.txn) {
        throw ProtocolError("cache: data grant with no matching request for " +
                            to_string(m.line));
      }
      if (!m.granted || !m.data) {
        throw ProtocolError("cache: data grant missing state or payload");
      }
      Pending p = std::move(it->second);
      pending_.erase(it);

      CacheLineState st = *m.granted;
      LineData data = *m.data;
      bool retired_write = false;
      if (p.wants_write) {
        if (st == CacheLineState::Exclusive) {
          st = CacheLineState::Modified;
          if (p.store_data) data = std::move(*p.store_data);
          retired_write = true;
        }
        // Granted Shared with a write pending: upgrade below.
      }
      install(m.line, st, data);
      for (auto& w : p.waiters) w(data);
      if (retired_write) retire_one();

      std::vector<Message> parked = std::move(p.parked);
      if (p.wants_write && !retired_write) {
        Pending up;
        up.wants_write = true;
        up.store_data = std::move(p.store_data);
        start_request(m.line, MsgKind::ReqUpgrade, std::move(up));
      }
      for (const Message& r : parked) handle_recall(r);
      return;
    }
    case MsgKind::RespAck: {
      auto it = pending_.find(m.line);
      if (it == pending_.end() || it->second.txn != m.txn) {
        throw ProtocolError("cache: ack with no matching request for " +
                            to_string(m.line));
      }
      Pending p = std::move(it->second);
      pending_.erase(it);
      Entry* e = find(m.line);
      if (e == nullptr) {
        throw ProtocolError("cache: upgrade ack for a line not held");
      }
      e->st = CacheLineState::Modified;
      if (p.store_data) e->data = std::move(*p.store_data);
      touch(*e);
      for (auto& w : p.waiters) w(e->data);
      if (p.wants_write) retire_one();
      for (const Message& r : p.parked) handle_recall(r);
      return;
    }
    case MsgKind::RetryLater: {
      auto it = pending_.find(m.line);
      if (it == pending_.end() || it->second.txn != m.txn) return;  // stale
      ++retries_seen_;
      Pending p = std::move(it->second);
      pending_.erase(it);
      const MsgKind kind = p.req_kind;
      const bool blocking = p.blocking;
      p.deadline = sched_.now() + params_.timeout_ns;
      std::vector<Message> parked;
      parked.swap(p.parked);
      start_request(m.line, kind, std::move(p));
      (void)blocking;
      for (const Message& r : parked) handle_recall(r);
      return;
    }
    case MsgKind::InvalidateToInvalid:
    case MsgKind::DowngradeToShared:
      handle_recall(m);
      return;
    default:
      throw ProtocolError(std::string("cache: unexpected message ") +
                          to_string(m.kind));
  }
}

void CpuCacheModel::handle_recall(const Message& m) {
  if (auto it = pending_.find(m.line); it != pending_.end()) {
    // An own transaction is in flight for this line; answering now could
    // surface stale data. Park the recall until the transaction resolves.
    it->second.parked.push_back(m);
    return;
  }
  Entry* e = find(m.line);
  Message reply;
  reply.line = m.line;
  reply.txn = m.txn;
  if (m.kind == MsgKind::InvalidateToInvalid) {
    if (e != nullptr && is_dirty(e->st)) {
      reply.kind = MsgKind::WriteBack;
      reply.data = std::move(e->data);
    } else {
      reply.kind = MsgKind::RespAck;
    }
    lines_.erase(m.line);
  } else {  // DowngradeToShared
    if (e != nullptr && (e->st == CacheLineState::Modified ||
                         e->st == CacheLineState::Owned)) {
      reply.kind = MsgKind::WriteBack;
      reply.data = e->data;  // keep the dirty copy, now Owned
      e->st = CacheLineState::Owned;
      touch(*e);
    } else {
      if (e != nullptr && e->st == CacheLineState::Exclusive) {
        e->st = CacheLineState::Shared;
        touch(*e);
      }
      reply.kind = MsgKind::RespAck;
    }
  }
  link_.send(self_, m.src, std::move(reply));
}

void CpuCacheModel::encode(std::string& out) const {
  out += "C[";
  for (const auto& [line, e] : lines_) {
    out += to_string(line);
    out += to_string(e.st);
    out += ';';
  }
  out += "|P";
  for (const auto& [line, p] : pending_) {
    out += to_string(line);
    out += to_string(p.req_kind);
    out += p.wants_write ? "w" : "-";
    out += std::to_string(p.parked.size());
    out += ';';
  }
  out += "|wb";
  out += std::to_string(write_buffer_.size());
  out += "|u";
  out += std::to_string(unretired_stores_);
  out += ']';
}

}  // namespace cohbench::coh
