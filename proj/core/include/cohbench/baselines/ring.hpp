#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace cohbench::baselines {

struct Descriptor {
  std::uint64_t addr = 0;
  std::uint32_t len = 0;
  std::uint32_t flags = 0;

  bool operator==(const Descriptor&) const = default;
};

// Producer/consumer ring of transfer requests. Indices wrap modulo capacity;
// the producer checks fullness, so entries are never overrun.
class DescriptorRing {
 public:
  explicit DescriptorRing(std::uint32_t capacity)
      : slots_(capacity == 0 ? 1 : capacity) {}

  std::uint32_t capacity() const {
    return static_cast<std::uint32_t>(slots_.size());
  }
  std::uint32_t size() const { return count_; }
  bool full() const { return count_ == capacity(); }
  bool empty() const { return count_ == 0; }

  // Slot index on success; empty when the ring is full ("would block").
  std::optional<std::uint32_t> push(const Descriptor& d) {
    if (full()) return std::nullopt;
    const std::uint32_t slot = tail_;
    slots_[slot] = d;
    tail_ = (tail_ + 1) % capacity();
    ++count_;
    return slot;
  }

  // FIFO pop; empty when nothing is queued.
  std::optional<Descriptor> pop() {
    if (empty()) return std::nullopt;
    Descriptor d = slots_[head_];
    head_ = (head_ + 1) % capacity();
    --count_;
    return d;
  }

 private:
  std::vector<Descriptor> slots_;
  std::uint32_t head_ = 0;
  std::uint32_t tail_ = 0;
  std::uint32_t count_ = 0;
};

}  // namespace cohbench::baselines
