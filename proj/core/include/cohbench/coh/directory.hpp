#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cohbench/coh/link.hpp"
#include "cohbench/coh/message.hpp"
#include "cohbench/coh/types.hpp"
#include "cohbench/sim/scheduler.hpp"

namespace cohbench::coh {

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deferred requests must be answered (data or "not ready yet") within this
// window, counted from request arrival.
struct TimeoutGuard {
  sim::SimTime timeout_ns = 100'000'000;
  double retry_margin = 0.9;

  sim::SimTime retry_after() const {
    return static_cast<sim::SimTime>(static_cast<double>(timeout_ns) *
                                     retry_margin);
  }
};

// Home-initiated recalls.
enum class PullKind : std::uint8_t {
  InvalidateFetch,  // drop to Invalid, return data
  InvalidateClean,  // drop to Invalid, data not needed
  DowngradeFetch,   // drop to Shared/Owned, return data
};

// How a consulted request should be answered.
struct RespondSpec {
  std::optional<CacheLineState> granted;  // Shared or Exclusive => RespData
  std::optional<LineData> data;           // payload for RespData
  bool ack = false;                       // RespAck (upgrade grant)
  sim::SimTime extra_ns = 0;              // extra processing before departure
  sim::SimTime pace_ns = 0;               // >0: response pipeline interval
};

// Decision of the device logic for one incoming request: answer now, or
// stall the requester (optionally kicking off recalls of other lines).
struct DeviceAction {
  bool defer = false;
  std::optional<RespondSpec> respond;
  std::vector<std::pair<LineId, PullKind>> pulls;
};

// Hook a smart endpoint implements for the lines it claims. Requests to
// unclaimed home lines are answered with plain memory semantics.
struct HomeLogic {
  virtual ~HomeLogic() = default;
  virtual bool owns(const LineId& line) const = 0;
  virtual DeviceAction on_request(std::uint64_t home_txn, const Message& req) = 0;
  virtual void on_pull_done(const LineId& line, const LineData* data) = 0;
  virtual void on_retry_sent(const LineId& /*line*/,
                             const Message& /*req*/) {}
};

struct DirParams {
  sim::SimTime proc_ns = 150;
  std::uint32_t tad_count = 64;
  std::uint32_t tad_capacity = 16;
  std::uint32_t line_size = 128;
  TimeoutGuard guard;
};

struct DirStats {
  std::uint64_t admitted = 0;
  std::uint64_t unit_queued = 0;  // transactions that waited for a unit slot
  std::uint64_t line_queued = 0;  // transactions serialized behind a line
  std::uint64_t retries_sent = 0;
  std::uint32_t peak_unit_in_flight = 0;
};

class CpuCacheModel;

// Home-node directory: tracks the remote state of every line homed here,
// serializes transactions per line, stripes them across TAD units with
// bounded capacity, and charges proc_ns per transaction.
class Directory final : public MessageHandler {
 public:
  Directory(sim::Scheduler& sched, Link& link, NodeId self, DirParams params,
            HomeLogic* logic = nullptr);

  void define_line(const LineId& line, LineData init);
  bool has_line(const LineId& line) const { return lines_.count(line) != 0; }

  // Marks a line as already granted to a remote node (channel warm-up).
  void seed_owner(const LineId& line, NodeId node, CacheLineState st);

  void on_message(const Message& m) override;

  // Device-side interface.
  std::uint64_t start_pull(const LineId& line, PullKind kind,
                           std::function<void(const LineData*)> done = {});
  void respond_deferred(std::uint64_t home_txn, RespondSpec spec);

  // Colocated cache (the home node's own CPU) interface.
  void set_local_cache(CpuCacheModel* cache) { local_cache_ = cache; }
  void set_logic(HomeLogic* logic) { logic_ = logic; }
  void local_load(const LineId& line,
                  std::function<void(const LineData&)> done);
  void local_store_grant(const LineId& line, std::function<void()> done);

  struct EntryView {
    std::optional<NodeId> owner;
    CacheLineState owner_state = CacheLineState::Invalid;
    std::vector<NodeId> sharers;
    bool local_cached = false;
    bool busy = false;
  };
  EntryView entry(const LineId& line) const;
  const LineData& home_data(const LineId& line) const;
  // No transaction in flight anywhere (quiescence sanity check).
  bool idle() const { return txns_.empty(); }
  const DirStats& stats() const { return stats_; }
  NodeId node() const { return self_; }
  const DirParams& params() const { return params_; }

  void encode(std::string& out) const;

 private:
  enum class TxnType { Remote, Pull };

  struct Txn {
    std::uint64_t id = 0;
    TxnType type = TxnType::Remote;
    LineId line;
    Message req;                 // Remote
    sim::SimTime arrived = 0;    // Remote: request arrival time
    bool deferred = false;
    PullKind pull_kind = PullKind::InvalidateFetch;  // Pull
    std::function<void(const LineData*)> pull_done;  // Pull
    int pulls_outstanding = 0;   // Remote default path: chained recalls
  };

  struct HomeLine {
    LineData data;
    std::optional<NodeId> owner;
    CacheLineState owner_state = CacheLineState::Invalid;
    std::set<NodeId> sharers;    // remote nodes holding Shared
    bool local_cached = false;   // home node's own cache holds a copy
    std::uint64_t active = 0;    // transaction currently owning the line
    std::deque<std::uint64_t> waiting;
    std::vector<std::function<void()>> local_waiters;
  };

  struct TadUnit {
    std::uint32_t in_flight = 0;
    std::deque<std::uint64_t> waiting;
  };

  HomeLine& line_at(const LineId& line);
  const HomeLine& line_at(const LineId& line) const;
  bool home_copy_current(const HomeLine& hl) const;

  void submit(std::uint64_t txn);
  void try_admit(std::uint64_t txn);
  void process(std::uint64_t txn);
  void process_remote_default(Txn& t);
  void process_pull(Txn& t);
  void do_respond(std::uint64_t txn, RespondSpec spec);
  void complete(std::uint64_t txn);
  void finish_pull(Txn& t, const LineData* data);
  void arm_guard(std::uint64_t txn);

  sim::Scheduler& sched_;
  Link& link_;
  NodeId self_;
  DirParams params_;
  HomeLogic* logic_;
  CpuCacheModel* local_cache_ = nullptr;

  std::map<LineId, HomeLine> lines_;
  std::vector<TadUnit> tads_;
  std::map<std::uint64_t, Txn> txns_;
  std::uint64_t next_txn_ = 1;
  sim::SimTime pipe_next_free_ = 0;
  DirStats stats_;
};

}  // namespace cohbench::coh
