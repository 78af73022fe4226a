#pragma once

#include <cstdint>
#include <memory>

#include "cohbench/coh/cpu_cache.hpp"
#include "cohbench/coh/directory.hpp"
#include "cohbench/coh/link.hpp"
#include "cohbench/config.hpp"
#include "cohbench/dev/endpoint.hpp"
#include "cohbench/sim/engine.hpp"

namespace cohbench {

// Everything a simulated topology needs, distilled from the flat Config.
struct SystemParams {
  std::uint32_t line_size = 128;
  coh::LinkParams link;
  coh::DirParams dir;
  coh::CacheParams cache;
  dev::DevParams dev;

  sim::SimTime per_line_pipeline_ns = 51;
  sim::SimTime nic_rx_fixed_ns = 150;
  sim::SimTime nic_per_line_rx_ns = 519;
  sim::SimTime nic_tx_fixed_ns = 310;
  sim::SimTime nic_per_line_tx_ns = 102;
  std::uint32_t nic_max_frame_bytes = 9600;

  static SystemParams from_config(const Config& cfg);
};

// CPU node and smart-device node over one coherent link. The device is the
// home for every channel line.
class System {
 public:
  static constexpr coh::NodeId kCpu = 0;
  static constexpr coh::NodeId kDevice = 1;

  System(sim::Scheduler& sched, const SystemParams& params);

  dev::ChannelId open_invoke_channel(std::uint32_t group_size,
                                     dev::ComputeFunction compute =
                                         dev::ComputeFunction::echo());
  dev::ChannelId open_send_channel(std::uint32_t overflow_lines,
                                   bool nic_timing = false);
  dev::ChannelId open_recv_channel(std::uint32_t overflow_lines,
                                   bool nic_timing = false);

  const SystemParams& params() const { return params_; }

  coh::Link& link() { return *link_; }
  coh::CpuCacheModel& cpu() { return *cpu_; }
  coh::Directory& dir() { return *dir_; }
  dev::DeviceEndpoint& device() { return *device_; }

 private:
  void warm_request_side(dev::ChannelId id);

  SystemParams params_;
  std::unique_ptr<coh::Link> link_;
  std::unique_ptr<coh::CpuCacheModel> cpu_;
  std::unique_ptr<coh::Directory> dir_;
  std::unique_ptr<dev::DeviceEndpoint> device_;
};

// Two CPU sockets over one link; the second socket homes the shared lines
// (its directory is colocated with its cache).
class CpuPairSystem {
 public:
  static constexpr coh::NodeId kSender = 0;
  static constexpr coh::NodeId kReceiver = 1;

  CpuPairSystem(sim::Scheduler& sched, const SystemParams& params);

  coh::LineId alloc_shared_line();

  coh::Link& link() { return *link_; }
  coh::CpuCacheModel& sender() { return *sender_; }
  coh::CpuCacheModel& receiver() { return *receiver_; }
  coh::Directory& home() { return *home_; }

 private:
  SystemParams params_;
  std::unique_ptr<coh::Link> link_;
  std::unique_ptr<coh::CpuCacheModel> sender_;
  std::unique_ptr<coh::CpuCacheModel> receiver_;
  std::unique_ptr<coh::Directory> home_;
  std::uint32_t next_index_ = 0;
};

}  // namespace cohbench
