#include "cohbench/dev/drivers.hpp"

#include <cassert>

namespace cohbench::dev {

namespace {

coh::LineData slice_line(const std::vector<std::uint8_t>& buf,
                         std::uint32_t idx, std::uint32_t line_size) {
  coh::LineData d = coh::LineData::zeroed(line_size);
  const std::size_t off = static_cast<std::size_t>(idx) * line_size;
  for (std::uint32_t i = 0; i < line_size; ++i) {
    if (off + i < buf.size()) d.bytes[i] = buf[off + i];
  }
  return d;
}

}  // namespace

InvokeDriver::InvokeDriver(sim::Scheduler& sched, coh::CpuCacheModel& cpu,
                           DeviceEndpoint& device, ChannelId channel)
    : sched_(sched), cpu_(cpu), device_(device), channel_(channel) {}

void InvokeDriver::invoke(std::vector<std::uint8_t> request,
                          std::uint32_t expected_response_bytes,
                          std::function<void(Result)> done) {
  assert(step_ == 0 && "previous invocation still running");
  step_ = 1;
  started_ = sched_.now();
  done_ = std::move(done);
  expected_bytes_ = expected_response_bytes;

  const std::uint32_t ls = device_.line_size();
  const auto req_lines = device_.request_lines(channel_);
  resp_lines_ = device_.response_lines(channel_);

  for (std::uint32_t i = 0; i < req_lines.size(); ++i) {
    cpu_.store(req_lines[i], slice_line(request, i, ls));
  }
  cpu_.barrier([this] {
    step_ = 2;
    response_.assign(expected_bytes_, 0);
    const std::uint32_t n = static_cast<std::uint32_t>(resp_lines_.size());
    if (!prefetch_order_.empty()) {
      for (std::uint32_t i : prefetch_order_) {
        if (i < n) cpu_.prefetch(resp_lines_[i], coh::CacheLineState::Shared);
      }
    } else {
      for (std::uint32_t i = 1; i < n; ++i) {
        cpu_.prefetch(resp_lines_[i], coh::CacheLineState::Shared);
      }
    }
    read_next(0);
  });
}

void InvokeDriver::read_next(std::uint32_t idx) {
  if (idx == resp_lines_.size()) {
    Result r;
    r.response = std::move(response_);
    r.started = started_;
    r.finished = sched_.now();
    step_ = 0;
    ++invocations_;
    auto done = std::move(done_);
    done_ = nullptr;
    done(std::move(r));
    return;
  }
  cpu_.load(resp_lines_[idx], [this, idx](const coh::LineData& d) {
    const std::size_t off = static_cast<std::size_t>(idx) * d.bytes.size();
    for (std::size_t i = 0; i < d.bytes.size(); ++i) {
      if (off + i < response_.size()) response_[off + i] = d.bytes[i];
    }
    read_next(idx + 1);
  });
}

void InvokeDriver::encode(std::string& out) const {
  out += "I[";
  out += std::to_string(step_);
  out += '.';
  out += std::to_string(invocations_);
  out += ']';
}

SendDriver::SendDriver(sim::Scheduler& sched, coh::CpuCacheModel& cpu,
                       DeviceEndpoint& device, ChannelId channel)
    : sched_(sched), cpu_(cpu), device_(device), channel_(channel) {}

void SendDriver::send(std::vector<std::uint8_t> payload,
                      std::function<void(Result)> done) {
  const sim::SimTime started = sched_.now();
  device_.begin_send(channel_, static_cast<std::uint32_t>(payload.size()));

  const std::uint32_t ls = device_.line_size();
  const LineId control = device_.control_request_line(channel_);
  const auto view = device_.channel(channel_);

  cpu_.store(control, slice_line(payload, 0, ls));
  const std::uint32_t extra_lines =
      payload.size() > ls
          ? (static_cast<std::uint32_t>(payload.size()) - ls + ls - 1) / ls
          : 0;
  for (std::uint32_t i = 0; i < extra_lines; ++i) {
    cpu_.store(view.overflow[i], slice_line(payload, i + 1, ls));
  }

  const LineId doorbell = device_.control_response_line(channel_);
  cpu_.barrier([this, doorbell, started, done = std::move(done)]() mutable {
    cpu_.load(doorbell, [this, started,
                         done = std::move(done)](const coh::LineData&) {
      Result r;
      r.started = started;
      r.finished = sched_.now();
      done(r);
    });
  });
}

RecvDriver::RecvDriver(sim::Scheduler& sched, coh::CpuCacheModel& cpu,
                       DeviceEndpoint& device, ChannelId channel)
    : sched_(sched), cpu_(cpu), device_(device), channel_(channel) {}

void RecvDriver::recv(std::uint32_t expected_bytes,
                      std::function<void(Result)> done) {
  started_ = sched_.now();
  done_ = std::move(done);
  const std::uint32_t ls = device_.line_size();
  lines_ = expected_bytes == 0 ? 1 : (expected_bytes + ls - 1) / ls;

  const auto view = device_.channel(channel_);
  overflow_lines_ = view.overflow;  // the bank is fixed for this receive
  for (std::uint32_t i = 0; i < lines_; ++i) {
    cpu_.prefetch(overflow_lines_[i], coh::CacheLineState::Shared);
  }
  const LineId control = device_.control_response_line(channel_);
  cpu_.load(control, [this](const coh::LineData& d) {
    frame_len_ = static_cast<std::uint32_t>(d.bytes[0]) |
                 (static_cast<std::uint32_t>(d.bytes[1]) << 8) |
                 (static_cast<std::uint32_t>(d.bytes[2]) << 16) |
                 (static_cast<std::uint32_t>(d.bytes[3]) << 24);
    frame_.assign(frame_len_, 0);
    read_overflow(0);
  });
}

void RecvDriver::read_overflow(std::uint32_t idx) {
  if (idx == lines_) {
    Result r;
    r.frame = std::move(frame_);
    r.started = started_;
    r.finished = sched_.now();
    auto done = std::move(done_);
    done_ = nullptr;
    done(std::move(r));
    return;
  }
  cpu_.load(overflow_lines_[idx], [this, idx](const coh::LineData& d) {
    const std::size_t off = static_cast<std::size_t>(idx) * d.bytes.size();
    for (std::size_t i = 0; i < d.bytes.size(); ++i) {
      if (off + i < frame_.size()) frame_[off + i] = d.bytes[i];
    }
    read_overflow(idx + 1);
  });
}

}  // namespace cohbench::dev
