#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cohbench/system.hpp"

namespace cohbench::ffwd {

// Simulated cache-line message passing between two CPU sockets: the sender's
// stores pull the line Exclusive (invalidating the receiver), the receiver's
// poll pulls it back Shared. A sequence counter embedded in the line data is
// the "finished" flag.
struct FfSimParams {
  sim::SimTime poll_interval_ns = 100;
  // When nonzero the sender publishes the payload in two separated bursts,
  // exposing the line to premature polls in between.
  sim::SimTime sender_gap_ns = 0;
};

class FfSimChannel {
 public:
  FfSimChannel(sim::Scheduler& sched, CpuPairSystem& sys, FfSimParams params);

  struct Delivery {
    std::uint64_t seq = 0;
    std::vector<std::uint8_t> payload;
    sim::SimTime sent_at = 0;
    sim::SimTime received_at = 0;
  };

  // Publishes one message. `done` fires when the sender's writes retired.
  void send(std::vector<std::uint8_t> payload, std::function<void()> done);

  // Polls until a message with sequence > last seen arrives.
  void recv(std::function<void(Delivery)> done);

 private:
  void poll();
  coh::LineData encode_message(std::uint64_t seq,
                               const std::vector<std::uint8_t>& payload,
                               bool complete) const;

  sim::Scheduler& sched_;
  CpuPairSystem& sys_;
  FfSimParams params_;
  coh::LineId line_;
  std::uint64_t send_seq_ = 0;
  std::uint64_t recv_seq_ = 0;
  sim::SimTime last_sent_at_ = 0;
  std::function<void(Delivery)> pending_recv_;
};

}  // namespace cohbench::ffwd
