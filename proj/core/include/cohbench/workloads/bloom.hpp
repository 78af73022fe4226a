#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "cohbench/config.hpp"

namespace cohbench::workloads {

struct BloomParams {
  std::uint32_t k = 8;               // hash lanes
  std::uint32_t element_bytes = 128;
  std::uint64_t cpu_per_element_ns = 2600;
  std::uint64_t dev_per_element_ns = 1700;

  static BloomParams from_config(const Config& cfg);
};

// Per-lane byte-sequential recurrence: state <- ((state << shift) + state)
// XOR byte, with a distinct odd seed and shift per lane. Pure and portable.
std::uint64_t bloom_lane_seed(std::uint32_t lane);
std::uint32_t bloom_lane_shift(std::uint32_t lane);

// The k 64-bit hashes of one element. Throws std::invalid_argument when the
// element length does not match params.element_bytes.
std::vector<std::uint64_t> bloom_hashes(const BloomParams& params,
                                        std::span<const std::uint8_t> element);

// Hash sets for a batch of elements, packed little-endian (k * 8 bytes per
// element). This is the device-side compute function's byte-level contract.
std::vector<std::uint8_t> bloom_hash_batch_bytes(
    const BloomParams& params, std::span<const std::uint8_t> elements);

}  // namespace cohbench::workloads
