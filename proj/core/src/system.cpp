#include "cohbench/system.hpp"

namespace cohbench {

SystemParams SystemParams::from_config(const Config& cfg) {
  SystemParams p;
  p.line_size = static_cast<std::uint32_t>(cfg.get_u64("line.size_bytes"));

  p.link.one_way_ns = cfg.get_u64("link.one_way_ns");
  p.link.reorder = cfg.get_bool("link.reorder");
  p.link.reorder_window =
      static_cast<std::uint32_t>(cfg.get_u64("link.reorder_window"));
  p.link.jitter_span_ns =
      cfg.get_bool("jitter.enabled") ? cfg.get_u64("jitter.link_span_ns") : 0;

  p.dir.proc_ns = cfg.get_u64("dir.proc_ns");
  p.dir.tad_count = static_cast<std::uint32_t>(cfg.get_u64("tad.count"));
  p.dir.tad_capacity = static_cast<std::uint32_t>(cfg.get_u64("tad.capacity"));
  p.dir.line_size = p.line_size;
  p.dir.guard.timeout_ns = cfg.get_u64("dev.timeout_ns");
  p.dir.guard.retry_margin = cfg.get_f64("dev.retry_margin");

  p.cache.line_size = p.line_size;
  p.cache.capacity_bytes =
      static_cast<std::uint32_t>(cfg.get_u64("cpu.cache_bytes"));
  p.cache.timeout_ns = cfg.get_u64("cpu.timeout_ns");

  p.dev.line_size = p.line_size;
  p.dev.exclusive_return = cfg.get_bool("dev.exclusive_return");
  // An upgrade round trip is already paid in messages; the remainder of the
  // configured penalty is charged as directory-side work.
  const sim::SimTime upgrade_rt = 2 * p.link.one_way_ns + p.dir.proc_ns;
  const sim::SimTime penalty = cfg.get_u64("dev.shared_return_penalty_ns");
  p.dev.shared_return_residual_ns =
      penalty > upgrade_rt ? penalty - upgrade_rt : 0;
  p.dev.thrash_factor = cfg.get_f64("dev.thrash_factor");
  p.dev.thrash_threshold_bytes =
      static_cast<std::uint32_t>(cfg.get_u64("cpu.cache_bytes"));

  p.per_line_pipeline_ns = cfg.get_u64("dev.per_line_pipeline_ns");
  p.nic_rx_fixed_ns = cfg.get_u64("nic.rx_fixed_ns");
  p.nic_per_line_rx_ns = cfg.get_u64("nic.per_line_rx_ns");
  p.nic_tx_fixed_ns = cfg.get_u64("nic.tx_fixed_ns");
  p.nic_per_line_tx_ns = cfg.get_u64("nic.per_line_tx_ns");
  p.nic_max_frame_bytes =
      static_cast<std::uint32_t>(cfg.get_u64("nic.max_frame_bytes"));
  return p;
}

System::System(sim::Scheduler& sched, const SystemParams& params)
    : params_(params) {
  link_ = std::make_unique<coh::Link>(sched, params_.link);
  cpu_ = std::make_unique<coh::CpuCacheModel>(sched, *link_, kCpu,
                                              params_.cache);
  dir_ = std::make_unique<coh::Directory>(sched, *link_, kDevice, params_.dir);
  device_ = std::make_unique<dev::DeviceEndpoint>(sched, *dir_, params_.dev);
  dir_->set_logic(device_.get());  // channel lines consult the endpoint
  link_->attach(kCpu, "cpu", *cpu_);
  link_->attach(kDevice, "dev", *dir_);
}

void System::warm_request_side(dev::ChannelId id) {
  for (const coh::LineId& line : device_->request_lines(id)) {
    dir_->seed_owner(line, kCpu, coh::CacheLineState::Exclusive);
    cpu_->local_install(line, coh::CacheLineState::Exclusive,
                        coh::LineData::zeroed(params_.line_size));
  }
}

dev::ChannelId System::open_invoke_channel(std::uint32_t group_size,
                                           dev::ComputeFunction compute) {
  dev::ChannelConfig cfg;
  cfg.variant = dev::ChannelVariant::Bidirectional;
  cfg.group_size = group_size;
  cfg.compute = std::move(compute);
  cfg.response_pace_ns = params_.per_line_pipeline_ns;
  dev::ChannelId id = device_->open_channel(cfg);
  warm_request_side(id);
  return id;
}

dev::ChannelId System::open_send_channel(std::uint32_t overflow_lines,
                                         bool nic_timing) {
  dev::ChannelConfig cfg;
  cfg.variant = dev::ChannelVariant::WriteToDevice;
  cfg.group_size = 1;
  cfg.overflow_lines = overflow_lines;
  if (nic_timing) {
    cfg.ingest_pace_ns = params_.nic_per_line_tx_ns;
    cfg.egress_fixed_ns = params_.nic_tx_fixed_ns;
  }
  dev::ChannelId id = device_->open_channel(cfg);
  warm_request_side(id);
  return id;
}

dev::ChannelId System::open_recv_channel(std::uint32_t overflow_lines,
                                         bool nic_timing) {
  dev::ChannelConfig cfg;
  cfg.variant = dev::ChannelVariant::ReadFromDevice;
  cfg.group_size = 1;
  cfg.overflow_lines = overflow_lines;
  cfg.response_pace_ns = params_.nic_per_line_rx_ns;
  if (nic_timing) {
    cfg.response_fixed_ns = params_.nic_rx_fixed_ns;
  }
  dev::ChannelId id = device_->open_channel(cfg);
  warm_request_side(id);
  return id;
}

CpuPairSystem::CpuPairSystem(sim::Scheduler& sched, const SystemParams& params)
    : params_(params) {
  link_ = std::make_unique<coh::Link>(sched, params_.link);
  sender_ = std::make_unique<coh::CpuCacheModel>(sched, *link_, kSender,
                                                 params_.cache);
  receiver_ = std::make_unique<coh::CpuCacheModel>(sched, *link_, kReceiver,
                                                   params_.cache);
  home_ = std::make_unique<coh::Directory>(sched, *link_, kReceiver,
                                           params_.dir, nullptr);
  home_->set_local_cache(receiver_.get());
  receiver_->set_local_home(home_.get());
  link_->attach(kSender, "cpu0", *sender_);
  link_->attach(kReceiver, "cpu1", *home_);
}

coh::LineId CpuPairSystem::alloc_shared_line() {
  coh::LineId line{kReceiver, next_index_++};
  home_->define_line(line, coh::LineData::zeroed(params_.line_size));
  return line;
}

}  // namespace cohbench
