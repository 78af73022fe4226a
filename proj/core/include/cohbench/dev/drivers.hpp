#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cohbench/coh/cpu_cache.hpp"
#include "cohbench/dev/endpoint.hpp"

namespace cohbench::dev {

// CPU-side sequence for one bidirectional exchange: write the request into
// the current request group, barrier, prefetch the response group, read it
// back. One instance per channel; invocations run back to back.
class InvokeDriver {
 public:
  InvokeDriver(sim::Scheduler& sched, coh::CpuCacheModel& cpu,
               DeviceEndpoint& device, ChannelId channel);

  struct Result {
    std::vector<std::uint8_t> response;
    sim::SimTime started = 0;
    sim::SimTime finished = 0;
  };

  void invoke(std::vector<std::uint8_t> request,
              std::uint32_t expected_response_bytes,
              std::function<void(Result)> done);

  // Test hook: permutes the order response-group prefetches are issued in.
  void set_prefetch_order(std::vector<std::uint32_t> order) {
    prefetch_order_ = std::move(order);
  }

  void encode(std::string& out) const;

 private:
  void read_next(std::uint32_t idx);

  sim::Scheduler& sched_;
  coh::CpuCacheModel& cpu_;
  DeviceEndpoint& device_;
  ChannelId channel_;

  std::vector<LineId> resp_lines_;
  std::vector<std::uint8_t> response_;
  std::uint32_t expected_bytes_ = 0;
  sim::SimTime started_ = 0;
  std::function<void(Result)> done_;
  std::vector<std::uint32_t> prefetch_order_;
  int step_ = 0;  // 0 idle, 1 writing, 2 reading
  std::uint64_t invocations_ = 0;
};

// CPU-side transmit: payload into the control line plus overflow lines,
// barrier, then the doorbell load of the response control line.
class SendDriver {
 public:
  SendDriver(sim::Scheduler& sched, coh::CpuCacheModel& cpu,
             DeviceEndpoint& device, ChannelId channel);

  struct Result {
    sim::SimTime started = 0;
    sim::SimTime finished = 0;  // acknowledgment seen by the CPU
  };

  void send(std::vector<std::uint8_t> payload, std::function<void(Result)> done);

 private:
  sim::Scheduler& sched_;
  coh::CpuCacheModel& cpu_;
  DeviceEndpoint& device_;
  ChannelId channel_;
};

// CPU-side receive: prefetch the payload lines, read the control line's
// frame descriptor, then collect the payload.
class RecvDriver {
 public:
  RecvDriver(sim::Scheduler& sched, coh::CpuCacheModel& cpu,
             DeviceEndpoint& device, ChannelId channel);

  struct Result {
    std::vector<std::uint8_t> frame;
    sim::SimTime started = 0;
    sim::SimTime finished = 0;
  };

  void recv(std::uint32_t expected_bytes, std::function<void(Result)> done);

 private:
  void read_overflow(std::uint32_t idx);

  sim::Scheduler& sched_;
  coh::CpuCacheModel& cpu_;
  DeviceEndpoint& device_;
  ChannelId channel_;

  std::uint32_t lines_ = 0;
  std::vector<LineId> overflow_lines_;
  std::uint32_t frame_len_ = 0;
  std::vector<std::uint8_t> frame_;
  sim::SimTime started_ = 0;
  std::function<void(Result)> done_;
};

}  // namespace cohbench::dev
