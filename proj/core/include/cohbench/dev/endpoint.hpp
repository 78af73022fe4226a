#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cohbench/coh/directory.hpp"
#include "cohbench/coh/types.hpp"
#include "cohbench/sim/scheduler.hpp"

namespace cohbench::dev {

using coh::LineData;
using coh::LineId;

enum class ChannelVariant : std::uint8_t {
  WriteToDevice,
  ReadFromDevice,
  Bidirectional,
};

const char* to_string(ChannelVariant v);

// Pure request->response function plus its modeled processing time.
struct ComputeFunction {
  std::function<std::vector<std::uint8_t>(const std::vector<std::uint8_t>&)>
      apply;
  std::function<sim::SimTime(const std::vector<std::uint8_t>&)> latency;

  static ComputeFunction echo();
};

struct ChannelConfig {
  ChannelVariant variant = ChannelVariant::Bidirectional;
  std::uint32_t group_size = 1;      // lines per group (bidirectional)
  std::uint32_t overflow_lines = 0;  // payload lines (send/recv)
  ComputeFunction compute = ComputeFunction::echo();
  sim::SimTime response_pace_ns = 51;   // response pipeline interval
  sim::SimTime response_fixed_ns = 0;   // staging before the first response
  sim::SimTime ingest_pace_ns = 0;      // per-line payload ingest (send)
  sim::SimTime egress_fixed_ns = 0;     // handoff after ingest (send)
};

struct DevParams {
  std::uint32_t line_size = 128;
  bool exclusive_return = true;
  // Extra directory work when a shared-granted line is upgraded later
  // (exclusive_return off). Derived from the configured penalty.
  sim::SimTime shared_return_residual_ns = 250;
  double thrash_factor = 1.3;
  std::uint32_t thrash_threshold_bytes = 32768;
};

using ChannelId = std::uint32_t;

// The smart endpoint. It is the home for every channel line, sees each
// coherence request for them, and is free to stall the requester, recall
// other lines, or answer with a better grant than was asked for. There is
// no cache here: payloads move straight between line transfers and the
// compute hook.
class DeviceEndpoint final : public coh::HomeLogic {
 public:
  DeviceEndpoint(sim::Scheduler& sched, coh::Directory& dir, DevParams params);

  ChannelId open_channel(ChannelConfig cfg);

  std::uint32_t line_size() const { return params_.line_size; }

  struct ChannelView {
    ChannelVariant variant{};
    std::uint32_t group_size = 0;
    std::vector<LineId> group0;  // request side at even parity
    std::vector<LineId> group1;  // response side at even parity
    std::vector<LineId> overflow;
    int parity = 0;
    std::uint64_t epoch = 0;
    bool hazard = false;  // unavoidable unit collision (deadlock demo mode)
  };
  ChannelView channel(ChannelId id) const;

  // Lines the CPU writes this epoch / reads this epoch.
  std::vector<LineId> request_lines(ChannelId id) const;
  std::vector<LineId> response_lines(ChannelId id) const;
  LineId control_request_line(ChannelId id) const;
  LineId control_response_line(ChannelId id) const;

  // Out-of-band descriptor content (what a real doorbell register carries).
  void begin_send(ChannelId id, std::uint32_t payload_bytes);
  void deliver_packet(ChannelId id, std::vector<std::uint8_t> frame);
  std::uint32_t queued_packets(ChannelId id) const;

  using EgressFn =
      std::function<void(ChannelId, std::vector<std::uint8_t>, sim::SimTime)>;
  void set_egress(EgressFn fn) { egress_ = std::move(fn); }

  // HomeLogic
  bool owns(const LineId& line) const override;
  coh::DeviceAction on_request(std::uint64_t home_txn,
                               const coh::Message& req) override;
  void on_pull_done(const LineId& line, const LineData* data) override;
  void on_retry_sent(const LineId& line, const coh::Message& req) override;

  void encode(std::string& out) const;

 private:
  enum Role : int { kGroup0, kGroup1, kOverflow };

  struct LineRef {
    ChannelId ch = 0;
    Role role = kGroup0;
    std::uint32_t idx = 0;
  };

  struct Channel {
    ChannelId id = 0;
    ChannelConfig cfg;
    std::vector<LineId> group0, group1, overflow;
    int parity = 0;
    std::uint64_t epoch = 0;
    bool hazard = false;

    // Per-epoch state.
    bool epoch_active = false;
    bool pulls_started = false;
    std::uint32_t pulls_outstanding = 0;
    std::vector<std::optional<LineData>> pulled;
    std::map<LineId, std::uint64_t> deferred;  // line -> home txn
    std::set<LineId> responded;
    bool response_ready = false;
    std::vector<std::uint8_t> response_bytes;

    // Receive side.
    std::deque<std::vector<std::uint8_t>> rx_queue;
    std::uint32_t rx_lines = 0;

    // Transmit side.
    std::uint32_t tx_bytes = 0;
    sim::SimTime ingest_next = 0;
    sim::SimTime last_ingest = 0;
  };

  const std::vector<LineId>& req_group(const Channel& ch) const {
    return ch.parity == 0 ? ch.group0 : ch.group1;
  }
  const std::vector<LineId>& resp_group(const Channel& ch) const {
    return ch.parity == 0 ? ch.group1 : ch.group0;
  }
  LineId control_req(const Channel& ch) const { return req_group(ch).front(); }
  LineId control_resp(const Channel& ch) const {
    return resp_group(ch).front();
  }

  LineId alloc_line();
  std::vector<std::pair<LineId, coh::PullKind>> start_epoch(Channel& ch);
  std::vector<std::pair<LineId, coh::PullKind>> begin_rx_epoch(Channel& ch);
  void finish_pull_phase(Channel& ch);
  void make_responses_ready(Channel& ch);
  coh::RespondSpec response_spec(Channel& ch, const LineId& line, bool paced);
  void maybe_end_epoch(Channel& ch);
  sim::SimTime paced_interval(const Channel& ch) const;
  std::uint32_t lines_for(std::uint32_t bytes) const;
  std::uint32_t expected_responses(const Channel& ch) const;

  sim::Scheduler& sched_;
  coh::Directory& dir_;
  DevParams params_;
  std::deque<Channel> channels_;  // stable references
  std::map<LineId, LineRef> line_map_;
  std::uint32_t next_line_index_ = 0;
  EgressFn egress_;
};

}  // namespace cohbench::dev
