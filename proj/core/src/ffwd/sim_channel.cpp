#include "cohbench/ffwd/sim_channel.hpp"

#include <cassert>

namespace cohbench::ffwd {

FfSimChannel::FfSimChannel(sim::Scheduler& sched, CpuPairSystem& sys,
                           FfSimParams params)
    : sched_(sched), sys_(sys), params_(params) {
  line_ = sys_.alloc_shared_line();
}

coh::LineData FfSimChannel::encode_message(
    std::uint64_t seq, const std::vector<std::uint8_t>& payload,
    bool complete) const {
  coh::LineData d = coh::LineData::zeroed(
      sys_.home().params().line_size == 0 ? 128
                                          : sys_.home().params().line_size);
  // Sequence flag goes in the first 8 bytes; it is only written with the
  // final burst, which is what makes a half-written line detectable.
  const std::uint64_t flag = complete ? seq : 0;
  for (int i = 0; i < 8; ++i) {
    d.bytes[i] = static_cast<std::uint8_t>(flag >> (8 * i));
  }
  for (std::size_t i = 0; i < payload.size() && 8 + i < d.bytes.size(); ++i) {
    d.bytes[8 + i] = payload[i];
  }
  return d;
}

void FfSimChannel::send(std::vector<std::uint8_t> payload,
                        std::function<void()> done) {
  const std::uint64_t seq = ++send_seq_;
  last_sent_at_ = sched_.now();
  auto& cpu = sys_.sender();
  if (params_.sender_gap_ns == 0) {
    cpu.store(line_, encode_message(seq, payload, true));
    cpu.barrier(std::move(done));
    return;
  }
  // Two-burst publication: payload first, the flag only after the gap.
  cpu.store(line_, encode_message(seq, payload, false));
  cpu.barrier([this, seq, payload = std::move(payload),
               done = std::move(done)]() mutable {
    sched_.schedule(
        params_.sender_gap_ns,
        [this, seq, payload = std::move(payload),
         done = std::move(done)]() mutable {
          auto& cpu = sys_.sender();
          cpu.store(line_, encode_message(seq, payload, true));
          cpu.barrier(std::move(done));
        },
        sim::EventClass::Normal, "ffwd-burst2");
  });
}

void FfSimChannel::recv(std::function<void(Delivery)> done) {
  assert(!pending_recv_ && "receive already in progress");
  pending_recv_ = std::move(done);
  poll();
}

void FfSimChannel::poll() {
  sys_.receiver().load(line_, [this](const coh::LineData& d) {
    std::uint64_t flag = 0;
    for (int i = 0; i < 8; ++i) {
      flag |= static_cast<std::uint64_t>(d.bytes[i]) << (8 * i);
    }
    if (flag > recv_seq_) {
      recv_seq_ = flag;
      Delivery dv;
      dv.seq = flag;
      dv.payload.assign(d.bytes.begin() + 8, d.bytes.end());
      dv.sent_at = last_sent_at_;
      dv.received_at = sched_.now();
      auto done = std::move(pending_recv_);
      pending_recv_ = nullptr;
      done(std::move(dv));
      return;
    }
    const sim::SimTime interval =
        params_.poll_interval_ns == 0 ? 1 : params_.poll_interval_ns;
    sched_.schedule(interval, [this] { poll(); }, sim::EventClass::Normal,
                    "ffwd-poll");
  });
}

}  // namespace cohbench::ffwd
