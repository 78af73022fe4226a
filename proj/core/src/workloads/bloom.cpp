#include "cohbench/workloads/bloom.hpp"

namespace cohbench::workloads {

BloomParams BloomParams::from_config(const Config& cfg) {
  BloomParams p;
  p.k = static_cast<std::uint32_t>(cfg.get_u64("bloom.k"));
  p.element_bytes = static_cast<std::uint32_t>(cfg.get_u64("bloom.element_bytes"));
  p.cpu_per_element_ns = cfg.get_u64("bloom.cpu_per_element_ns");
  p.dev_per_element_ns = cfg.get_u64("bloom.dev_per_element_ns");
  return p;
}

std::uint64_t bloom_lane_seed(std::uint32_t lane) {
  // splitmix64 of the lane index, forced odd.
  std::uint64_t z = (static_cast<std::uint64_t>(lane) + 1) *
                    0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return (z ^ (z >> 31)) | 1ull;
}

std::uint32_t bloom_lane_shift(std::uint32_t lane) {
  static constexpr std::uint32_t kShifts[8] = {5, 7, 11, 13, 17, 19, 23, 29};
  return kShifts[lane % 8];
}

std::vector<std::uint64_t> bloom_hashes(const BloomParams& params,
                                        std::span<const std::uint8_t> element) {
  if (element.size() != params.element_bytes) {
    throw std::invalid_argument("bloom_hashes: element must be exactly " +
                                std::to_string(params.element_bytes) +
                                " bytes");
  }
  std::vector<std::uint64_t> out(params.k);
  for (std::uint32_t lane = 0; lane < params.k; ++lane) {
    std::uint64_t state = bloom_lane_seed(lane);
    const std::uint32_t shift = bloom_lane_shift(lane);
    for (std::uint8_t b : element) {
      state = ((state << shift) + state) ^ static_cast<std::uint64_t>(b);
    }
    out[lane] = state;
  }
  return out;
}

std::vector<std::uint8_t> bloom_hash_batch_bytes(
    const BloomParams& params, std::span<const std::uint8_t> elements) {
  if (elements.size() % params.element_bytes != 0) {
    throw std::invalid_argument(
        "bloom_hash_batch_bytes: batch must be a whole number of elements");
  }
  const std::size_t count = elements.size() / params.element_bytes;
  std::vector<std::uint8_t> out;
  out.reserve(count * params.k * 8);
  for (std::size_t e = 0; e < count; ++e) {
    auto hashes = bloom_hashes(
        params, elements.subspan(e * params.element_bytes, params.element_bytes));
    for (std::uint64_t h : hashes) {
      for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>(h >> (8 * i)));
      }
    }
  }
  return out;
}

}  // namespace cohbench::workloads
