#pragma once

#include <cstdint>
#include <random>

namespace fms {

// Generator contract: std::mt19937_64 seeded through std::seed_seq with the
// 32-bit halves of (seed, stream, index, step). Both algorithms are fully
// specified by the standard, so draws are reproducible across platforms and
// independent of how substreams are scheduled.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t index = 0, std::uint64_t step = 0) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xFFFFFFFFu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream),
                    lo(index), hi(index), lo(step), hi(step)};
  return std::mt19937_64(seq);
}

// Stream identifiers keep unrelated consumers of one seed apart.
namespace streams {
inline constexpr std::uint64_t kXiUnderX = 1;
inline constexpr std::uint64_t kXiUnderY = 2;
inline constexpr std::uint64_t kTrace = 3;
inline constexpr std::uint64_t kCloud = 4;
inline constexpr std::uint64_t kReference = 5;
inline constexpr std::uint64_t kBootstrap = 6;
inline constexpr std::uint64_t kContraction = 7;
}  // namespace streams

}  // namespace fms
