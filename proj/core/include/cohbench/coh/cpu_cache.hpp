#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cohbench/coh/link.hpp"
#include "cohbench/coh/message.hpp"
#include "cohbench/coh/types.hpp"
#include "cohbench/sim/scheduler.hpp"

namespace cohbench::coh {

class Directory;

struct CacheParams {
  std::uint32_t line_size = 128;
  std::uint32_t capacity_bytes = 32768;
  sim::SimTime timeout_ns = 100'000'000;  // blocked-request machine check

  std::uint32_t capacity_lines() const {
    return capacity_bytes / (line_size == 0 ? 1 : line_size);
  }
};

// Single point-of-coherence CPU cache with a coalescing write buffer.
// Stores are buffered and drain on the next memory operation; a barrier
// waits until every drained store has retired (its line is writable
// locally), which is what orders the payload writes before the signalling
// load in the messaging protocols.
class CpuCacheModel final : public MessageHandler {
 public:
  CpuCacheModel(sim::Scheduler& sched, Link& link, NodeId self,
                CacheParams params);

  // --- core-visible operations -------------------------------------------
  void store(const LineId& line, LineData data);
  void barrier(std::function<void()> on_drained);
  void load(const LineId& line, std::function<void(const LineData&)> on_data);
  void prefetch(const LineId& line, CacheLineState want);

  // --- wiring --------------------------------------------------------------
  void set_local_home(Directory* dir) { local_home_ = dir; }

  // --- used by a colocated home directory ----------------------------------
  void local_install(const LineId& line, CacheLineState st, LineData data);
  void local_invalidate(const LineId& line);

  // --- introspection --------------------------------------------------------
  CacheLineState line_state(const LineId& line) const;
  const LineData* line_data(const LineId& line) const;
  std::uint64_t retries_seen() const { return retries_seen_; }

  void on_message(const Message& m) override;
  void encode(std::string& out) const;

 private:
  struct Entry {
    CacheLineState st = CacheLineState::Invalid;
    LineData data;
    std::uint64_t lru = 0;
  };

  struct Pending {
    MsgKind req_kind{};
    std::uint64_t txn = 0;
    bool wants_write = false;             // store fetch or upgrade
    std::optional<LineData> store_data;   // merged on grant
    std::vector<std::function<void(const LineData&)>> waiters;
    bool blocking = false;                // a blocked load: deadline applies
    sim::SimTime deadline = 0;
    std::vector<Message> parked;          // recalls held until resolution
  };

  Entry* find(const LineId& line);
  const Entry* find(const LineId& line) const;
  void touch(Entry& e) { e.lru = ++lru_tick_; }
  void install(const LineId& line, CacheLineState st, LineData data);
  void evict_if_needed(const LineId& just_installed);
  void flush_write_buffer();
  void drain_store(const LineId& line, LineData data);
  void start_request(const LineId& line, MsgKind kind, Pending pending);
  void retire_one();
  void resolve(const LineId& line, Pending&& p, const LineData& granted_data);
  void handle_recall(const Message& m);
  void arm_deadline(const LineId& line);

  sim::Scheduler& sched_;
  Link& link_;
  NodeId self_;
  CacheParams params_;
  Directory* local_home_ = nullptr;

  std::map<LineId, Entry> lines_;
  std::map<LineId, Pending> pending_;
  std::vector<std::pair<LineId, LineData>> write_buffer_;
  int unretired_stores_ = 0;
  std::vector<std::function<void()>> barrier_waiters_;
  std::uint64_t lru_tick_ = 0;
  std::uint64_t next_txn_ = 1;
  std::uint64_t retries_seen_ = 0;
};

}  // namespace cohbench::coh
