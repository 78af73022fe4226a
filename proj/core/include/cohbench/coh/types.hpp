#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace cohbench::coh {

using NodeId = std::uint32_t;

// MESI states plus Owned (dirty-shared, supplies data without writeback).
enum class CacheLineState : std::uint8_t {
  Invalid,
  Shared,
  Exclusive,
  Modified,
  Owned,
};

const char* to_string(CacheLineState s);

inline bool is_valid(CacheLineState s) { return s != CacheLineState::Invalid; }
inline bool is_writable(CacheLineState s) {
  return s == CacheLineState::Exclusive || s == CacheLineState::Modified;
}
inline bool is_dirty(CacheLineState s) {
  return s == CacheLineState::Modified || s == CacheLineState::Owned;
}

// A cache line identity: index within its home node's address range.
struct LineId {
  NodeId home = 0;
  std::uint32_t index = 0;

  auto operator<=>(const LineId&) const = default;
};

// The transaction unit a line maps to. Consecutive indices land on distinct
// units whenever more than one exists.
inline std::uint32_t tad_of(const LineId& line, std::uint32_t tad_count) {
  return line.index % (tad_count == 0 ? 1 : tad_count);
}

std::string to_string(const LineId& line);

// Payload of one cache line. Length always equals the configured line size.
struct LineData {
  std::vector<std::uint8_t> bytes;

  static LineData zeroed(std::size_t line_size) {
    LineData d;
    d.bytes.assign(line_size, 0);
    return d;
  }
};

}  // namespace cohbench::coh
