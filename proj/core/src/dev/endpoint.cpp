#include "cohbench/dev/endpoint.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace cohbench::dev {

using coh::CacheLineState;
using coh::DeviceAction;
using coh::Message;
using coh::MsgKind;
using coh::ProtocolError;
using coh::PullKind;
using coh::RespondSpec;

const char* to_string(ChannelVariant v) {
  switch (v) {
    case ChannelVariant::WriteToDevice: return "write_to_device";
    case ChannelVariant::ReadFromDevice: return "read_from_device";
    case ChannelVariant::Bidirectional: return "bidirectional";
  }
  return "?";
}

ComputeFunction ComputeFunction::echo() {
  ComputeFunction f;
  f.apply = [](const std::vector<std::uint8_t>& in) { return in; };
  f.latency = [](const std::vector<std::uint8_t>&) { return sim::SimTime{0}; };
  return f;
}

DeviceEndpoint::DeviceEndpoint(sim::Scheduler& sched, coh::Directory& dir,
                               DevParams params)
    : sched_(sched), dir_(dir), params_(params) {}

LineId DeviceEndpoint::alloc_line() {
  LineId line{dir_.node(), next_line_index_++};
  dir_.define_line(line, LineData::zeroed(params_.line_size));
  return line;
}

ChannelId DeviceEndpoint::open_channel(ChannelConfig cfg) {
  if (cfg.group_size == 0) cfg.group_size = 1;
  const ChannelId id = static_cast<ChannelId>(channels_.size());
  channels_.emplace_back();
  Channel& ch = channels_.back();
  ch.id = id;
  ch.cfg = cfg;
  for (std::uint32_t i = 0; i < cfg.group_size; ++i) {
    LineId l = alloc_line();
    line_map_[l] = LineRef{id, kGroup0, i};
    ch.group0.push_back(l);
  }
  for (std::uint32_t i = 0; i < cfg.group_size; ++i) {
    LineId l = alloc_line();
    line_map_[l] = LineRef{id, kGroup1, i};
    ch.group1.push_back(l);
  }
  // Receive channels keep two banks of payload lines and alternate them by
  // epoch: the bank that just delivered a frame is invalidated in parallel
  // with the next control transition, so stale copies never collide with
  // in-flight requests for fresh data.
  const std::uint32_t overflow_total =
      cfg.variant == ChannelVariant::ReadFromDevice ? 2 * cfg.overflow_lines
                                                    : cfg.overflow_lines;
  for (std::uint32_t i = 0; i < overflow_total; ++i) {
    LineId l = alloc_line();
    line_map_[l] = LineRef{id, kOverflow, i};
    ch.overflow.push_back(l);
  }
  // With a single transaction unit the coupled lines cannot sit on
  // independent units, so a stalled request can starve its own recall.
  ch.hazard = dir_.params().tad_count < 2;
  return id;
}

DeviceEndpoint::ChannelView DeviceEndpoint::channel(ChannelId id) const {
  const Channel& ch = channels_.at(id);
  ChannelView v;
  v.variant = ch.cfg.variant;
  v.group_size = ch.cfg.group_size;
  v.group0 = ch.group0;
  v.group1 = ch.group1;
  if (ch.cfg.variant == ChannelVariant::ReadFromDevice) {
    // The active payload bank for this epoch.
    const std::uint32_t k = ch.cfg.overflow_lines;
    const std::uint32_t base = ch.parity == 0 ? 0 : k;
    v.overflow.assign(ch.overflow.begin() + base,
                      ch.overflow.begin() + base + k);
  } else {
    v.overflow = ch.overflow;
  }
  v.parity = ch.parity;
  v.epoch = ch.epoch;
  v.hazard = ch.hazard;
  return v;
}

std::vector<LineId> DeviceEndpoint::request_lines(ChannelId id) const {
  return req_group(channels_.at(id));
}

std::vector<LineId> DeviceEndpoint::response_lines(ChannelId id) const {
  return resp_group(channels_.at(id));
}

LineId DeviceEndpoint::control_request_line(ChannelId id) const {
  return control_req(channels_.at(id));
}

LineId DeviceEndpoint::control_response_line(ChannelId id) const {
  return control_resp(channels_.at(id));
}

std::uint32_t DeviceEndpoint::lines_for(std::uint32_t bytes) const {
  if (bytes == 0) return 1;
  return (bytes + params_.line_size - 1) / params_.line_size;
}

sim::SimTime DeviceEndpoint::paced_interval(const Channel& ch) const {
  sim::SimTime ii = ch.cfg.response_pace_ns;
  const std::uint64_t group_bytes =
      static_cast<std::uint64_t>(ch.cfg.group_size) * params_.line_size;
  if (ch.cfg.variant == ChannelVariant::Bidirectional &&
      group_bytes > params_.thrash_threshold_bytes) {
    ii = static_cast<sim::SimTime>(
        std::llround(static_cast<double>(ii) * params_.thrash_factor));
  }
  return ii;
}

std::uint32_t DeviceEndpoint::expected_responses(const Channel& ch) const {
  switch (ch.cfg.variant) {
    case ChannelVariant::Bidirectional: return ch.cfg.group_size;
    case ChannelVariant::ReadFromDevice: return 1 + ch.rx_lines;
    case ChannelVariant::WriteToDevice: return 1;
  }
  return 1;
}

bool DeviceEndpoint::owns(const LineId& line) const {
  return line_map_.count(line) != 0;
}

void DeviceEndpoint::begin_send(ChannelId id, std::uint32_t payload_bytes) {
  Channel& ch = channels_.at(id);
  const std::uint32_t capacity =
      (1 + static_cast<std::uint32_t>(ch.overflow.size())) * params_.line_size;
  if (payload_bytes > capacity) {
    throw ProtocolError("oversized frame: " + std::to_string(payload_bytes) +
                        " bytes exceeds channel capacity of " +
                        std::to_string(capacity));
  }
  ch.tx_bytes = payload_bytes;
}

void DeviceEndpoint::deliver_packet(ChannelId id,
                                    std::vector<std::uint8_t> frame) {
  Channel& ch = channels_.at(id);
  const std::uint32_t capacity = ch.cfg.overflow_lines * params_.line_size;
  if (frame.size() > capacity) {
    throw ProtocolError("oversized frame: " + std::to_string(frame.size()) +
                        " bytes exceeds channel capacity of " +
                        std::to_string(capacity));
  }
  ch.rx_queue.push_back(std::move(frame));
  if (ch.epoch_active && !ch.pulls_started) {
    // The waiting epoch can move now that data exists.
    for (auto& [line, kind] : begin_rx_epoch(ch)) {
      dir_.start_pull(line, kind);
    }
  }
}

std::uint32_t DeviceEndpoint::queued_packets(ChannelId id) const {
  return static_cast<std::uint32_t>(channels_.at(id).rx_queue.size());
}

DeviceAction DeviceEndpoint::on_request(std::uint64_t home_txn,
                                        const Message& req) {
  auto it = line_map_.find(req.line);
  if (it == line_map_.end()) {
    throw ProtocolError("device: request for unknown line " +
                        to_string(req.line));
  }
  const LineRef ref = it->second;
  Channel& ch = channels_[ref.ch];

  DeviceAction action;

  // The CPU acquiring write ownership: an upgrade of a line handed back
  // Shared, or a plain write miss on a payload line. The upgrade carries
  // the extra work of invalidating our own copy before granting.
  if (req.kind == MsgKind::ReqUpgrade) {
    RespondSpec spec;
    spec.ack = true;
    spec.extra_ns = params_.shared_return_residual_ns;
    action.respond = spec;
    return action;
  }
  if (req.kind == MsgKind::ReqExclusive) {
    RespondSpec spec;
    spec.granted = CacheLineState::Exclusive;
    spec.data = dir_.home_data(req.line);
    action.respond = spec;
    return action;
  }
  if (req.kind != MsgKind::ReqShared) {
    throw ProtocolError(std::string("device: unexpected request ") +
                        to_string(req.kind) + " for " + to_string(req.line));
  }

  bool response_side;
  if (ref.role == kOverflow) {
    // Only the active receive bank may be read.
    const std::uint32_t k = ch.cfg.overflow_lines;
    const std::uint32_t base = ch.parity == 0 ? 0 : k;
    response_side = ch.cfg.variant == ChannelVariant::ReadFromDevice &&
                    ref.idx >= base && ref.idx < base + k;
  } else {
    response_side = (ref.role == kGroup1) == (ch.parity == 0);
  }
  if (!response_side) {
    throw ProtocolError("device: read request for a request-side line " +
                        to_string(req.line));
  }

  if (ch.responded.count(req.line) != 0) {
    // Duplicate within the epoch (reorder or retry): idempotent, the same
    // answer again, off the pipeline.
    action.respond = response_spec(ch, req.line, /*paced=*/false);
    return action;
  }
  if (ch.response_ready) {
    // Straggler: the rest of the epoch already answered.
    ch.responded.insert(req.line);
    action.respond = response_spec(ch, req.line, /*paced=*/true);
    ChannelId id = ch.id;
    sched_.schedule(
        0, [this, id] { maybe_end_epoch(channels_[id]); },
        sim::EventClass::Normal, "epoch-check");
    return action;
  }

  action.defer = true;
  ch.deferred[req.line] = home_txn;
  if (!ch.epoch_active) {
    ch.epoch_active = true;
    action.pulls = start_epoch(ch);
  }
  return action;
}

std::vector<std::pair<LineId, PullKind>> DeviceEndpoint::start_epoch(
    Channel& ch) {
  ch.pulls_started = false;
  ch.pulls_outstanding = 0;
  ch.response_ready = false;
  ch.responded.clear();
  std::vector<std::pair<LineId, PullKind>> pulls;
  switch (ch.cfg.variant) {
    case ChannelVariant::Bidirectional: {
      const auto& reqs = req_group(ch);
      ch.pulled.assign(reqs.size(), std::nullopt);
      ch.pulls_outstanding = static_cast<std::uint32_t>(reqs.size());
      ch.pulls_started = true;
      for (const LineId& l : reqs) {
        pulls.emplace_back(l, PullKind::InvalidateFetch);
      }
      return pulls;
    }
    case ChannelVariant::ReadFromDevice: {
      if (!ch.rx_queue.empty()) return begin_rx_epoch(ch);
      return pulls;  // wait for a frame
    }
    case ChannelVariant::WriteToDevice: {
      ch.ingest_next = 0;
      ch.last_ingest = sched_.now();
      ch.pulled.assign(1 + ch.overflow.size(), std::nullopt);
      ch.pulls_outstanding =
          1 + static_cast<std::uint32_t>(ch.overflow.size());
      ch.pulls_started = true;
      pulls.emplace_back(control_req(ch), PullKind::InvalidateFetch);
      for (const LineId& l : ch.overflow) {
        pulls.emplace_back(l, PullKind::InvalidateFetch);
      }
      return pulls;
    }
  }
  return pulls;
}

std::vector<std::pair<LineId, PullKind>> DeviceEndpoint::begin_rx_epoch(
    Channel& ch) {
  ch.rx_lines =
      lines_for(static_cast<std::uint32_t>(ch.rx_queue.front().size()));
  ch.pulls_started = true;
  // Reclaim the control line and the stale payload bank in parallel.
  const std::uint32_t k = ch.cfg.overflow_lines;
  const std::uint32_t stale_base = ch.parity == 0 ? k : 0;
  ch.pulls_outstanding = 1 + k;
  std::vector<std::pair<LineId, PullKind>> pulls;
  pulls.emplace_back(control_req(ch), PullKind::InvalidateClean);
  for (std::uint32_t i = 0; i < k; ++i) {
    pulls.emplace_back(ch.overflow[stale_base + i], PullKind::InvalidateClean);
  }
  return pulls;
}

void DeviceEndpoint::on_pull_done(const LineId& line, const LineData* data) {
  auto it = line_map_.find(line);
  if (it == line_map_.end()) return;
  const LineRef ref = it->second;
  Channel& ch = channels_[ref.ch];
  if (!ch.epoch_active || ch.pulls_outstanding == 0) return;

  if (ch.cfg.variant == ChannelVariant::Bidirectional) {
    if (ref.role != kOverflow) ch.pulled[ref.idx] = dir_.home_data(line);
  } else if (ch.cfg.variant == ChannelVariant::WriteToDevice) {
    // Serialize data-carrying lines through the internal ingest path.
    if (data != nullptr && ch.cfg.ingest_pace_ns > 0) {
      sim::SimTime t = std::max(sched_.now(), ch.ingest_next);
      ch.ingest_next = t + ch.cfg.ingest_pace_ns;
      ch.last_ingest = std::max(ch.last_ingest, t);
    } else {
      ch.last_ingest = std::max(ch.last_ingest, sched_.now());
    }
    const std::size_t slot = ref.role == kOverflow ? 1 + ref.idx : 0;
    ch.pulled[slot] = dir_.home_data(line);
  }

  if (--ch.pulls_outstanding == 0) {
    finish_pull_phase(ch);
  }
}

void DeviceEndpoint::finish_pull_phase(Channel& ch) {
  const ChannelId id = ch.id;
  switch (ch.cfg.variant) {
    case ChannelVariant::Bidirectional: {
      std::vector<std::uint8_t> request;
      request.reserve(ch.pulled.size() * params_.line_size);
      for (const auto& d : ch.pulled) {
        if (d) {
          request.insert(request.end(), d->bytes.begin(), d->bytes.end());
        } else {
          request.insert(request.end(), params_.line_size, 0);
        }
      }
      const sim::SimTime delay =
          ch.cfg.compute.latency ? ch.cfg.compute.latency(request)
                                 : sim::SimTime{0};
      sched_.schedule(
          delay,
          [this, id, request = std::move(request)]() mutable {
            Channel& c = channels_[id];
            c.response_bytes = c.cfg.compute.apply(request);
            make_responses_ready(c);
          },
          sim::EventClass::Normal, "compute");
      return;
    }
    case ChannelVariant::ReadFromDevice: {
      sched_.schedule(
          ch.cfg.response_fixed_ns,
          [this, id] {
            Channel& c = channels_[id];
            c.response_bytes = c.rx_queue.front();
            make_responses_ready(c);
          },
          sim::EventClass::Normal, "rx-stage");
      return;
    }
    case ChannelVariant::WriteToDevice: {
      std::vector<std::uint8_t> frame;
      frame.reserve(ch.tx_bytes);
      for (std::uint32_t i = 0; i < ch.tx_bytes; ++i) {
        const std::uint32_t slot = i / params_.line_size;
        const std::uint32_t off = i % params_.line_size;
        const auto& d = ch.pulled[slot];
        frame.push_back(d ? d->bytes[off] : 0);
      }
      const sim::SimTime egress_at = ch.last_ingest + ch.cfg.egress_fixed_ns;
      const sim::SimTime delay =
          egress_at > sched_.now() ? egress_at - sched_.now() : 0;
      sched_.schedule(
          delay,
          [this, id, frame = std::move(frame)]() mutable {
            Channel& c = channels_[id];
            if (egress_) egress_(id, std::move(frame), sched_.now());
            c.response_bytes.clear();
            make_responses_ready(c);
          },
          sim::EventClass::Normal, "egress");
      return;
    }
  }
}

void DeviceEndpoint::make_responses_ready(Channel& ch) {
  ch.response_ready = true;
  std::vector<LineId> order;
  if (ch.cfg.variant == ChannelVariant::Bidirectional) {
    order = resp_group(ch);
  } else {
    order.push_back(control_resp(ch));
    if (ch.cfg.variant == ChannelVariant::ReadFromDevice) {
      const std::uint32_t base = ch.parity == 0 ? 0 : ch.cfg.overflow_lines;
      for (std::uint32_t i = 0; i < ch.rx_lines; ++i) {
        order.push_back(ch.overflow[base + i]);
      }
    }
  }
  for (const LineId& line : order) {
    auto it = ch.deferred.find(line);
    if (it == ch.deferred.end()) continue;
    const std::uint64_t txn = it->second;
    ch.deferred.erase(it);
    ch.responded.insert(line);
    dir_.respond_deferred(txn, response_spec(ch, line, /*paced=*/true));
  }
  maybe_end_epoch(ch);
}

RespondSpec DeviceEndpoint::response_spec(Channel& ch, const LineId& line,
                                          bool paced) {
  const LineRef ref = line_map_.at(line);
  RespondSpec spec;
  const std::uint32_t ls = params_.line_size;
  LineData d = LineData::zeroed(ls);

  auto fill_slice = [&](std::uint32_t slice_idx) {
    const std::size_t off = static_cast<std::size_t>(slice_idx) * ls;
    for (std::uint32_t i = 0; i < ls; ++i) {
      if (off + i < ch.response_bytes.size()) {
        d.bytes[i] = ch.response_bytes[off + i];
      }
    }
  };
  auto fill_descriptor = [&](std::uint32_t len) {
    d.bytes[0] = static_cast<std::uint8_t>(len);
    d.bytes[1] = static_cast<std::uint8_t>(len >> 8);
    d.bytes[2] = static_cast<std::uint8_t>(len >> 16);
    d.bytes[3] = static_cast<std::uint8_t>(len >> 24);
  };

  switch (ch.cfg.variant) {
    case ChannelVariant::Bidirectional:
      fill_slice(ref.idx);
      spec.granted = params_.exclusive_return ? CacheLineState::Exclusive
                                              : CacheLineState::Shared;
      spec.pace_ns = paced ? paced_interval(ch) : 0;
      break;
    case ChannelVariant::ReadFromDevice:
      if (ref.role != kOverflow) {
        // Control line: frame descriptor. Granted Exclusive so the pair
        // swaps roles without another transaction.
        fill_descriptor(static_cast<std::uint32_t>(ch.response_bytes.size()));
        spec.granted = CacheLineState::Exclusive;
      } else {
        const std::uint32_t base = ch.parity == 0 ? 0 : ch.cfg.overflow_lines;
        fill_slice(ref.idx - base);
        spec.granted = CacheLineState::Shared;
        spec.pace_ns = paced ? ch.cfg.response_pace_ns : 0;
      }
      break;
    case ChannelVariant::WriteToDevice:
      fill_descriptor(ch.tx_bytes);
      spec.granted = CacheLineState::Exclusive;
      break;
  }
  spec.data = std::move(d);
  return spec;
}

void DeviceEndpoint::maybe_end_epoch(Channel& ch) {
  if (!ch.epoch_active || !ch.response_ready) return;
  if (ch.responded.size() < expected_responses(ch)) return;
  ch.epoch_active = false;
  ch.pulls_started = false;
  ch.response_ready = false;
  ch.responded.clear();
  ch.pulled.clear();
  ch.deferred.clear();
  ch.response_bytes.clear();
  if (ch.cfg.variant == ChannelVariant::ReadFromDevice) {
    ch.rx_queue.pop_front();
    ch.rx_lines = 0;
  }
  ch.parity ^= 1;
  ++ch.epoch;
}

void DeviceEndpoint::on_retry_sent(const LineId& line, const Message& req) {
  (void)req;
  auto it = line_map_.find(line);
  if (it == line_map_.end()) return;
  channels_[it->second.ch].deferred.erase(line);
}

void DeviceEndpoint::encode(std::string& out) const {
  out += "V[";
  for (const Channel& ch : channels_) {
    out += std::to_string(ch.parity);
    out += ch.epoch_active ? "a" : "-";
    out += ch.pulls_started ? "s" : "-";
    out += std::to_string(ch.pulls_outstanding);
    out += ch.response_ready ? "r" : "-";
    out += 'd';
    for (const auto& [line, txn] : ch.deferred) {
      (void)txn;
      out += to_string(line);
    }
    out += 'k';
    out += std::to_string(ch.responded.size());
    out += 'e';
    out += std::to_string(ch.epoch);
    out += ';';
  }
  out += ']';
}

}  // namespace cohbench::dev
