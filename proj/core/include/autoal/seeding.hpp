#pragma once

#include <cstdint>

namespace autoal {

// splitmix64-style mixer used to derive independent seed streams from one
// master seed. Every stochastic stage of a run draws its seed through this,
// so two methods sharing a master seed also share pool initialization and
// the task-model init stream (paired comparisons rely on that).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace seed_stream {

// Method-independent streams (must match across methods for pairing).
inline constexpr std::uint64_t kTestSplit = 1;
inline constexpr std::uint64_t kPoolInit = 2;
inline constexpr std::uint64_t kTaskModel = 3;  // chain with round index

// Method-local streams.
inline constexpr std::uint64_t kBilevel = 16;
inline constexpr std::uint64_t kQuery = 17;
inline constexpr std::uint64_t kRandomBaseline = 18;
inline constexpr std::uint64_t kBaselineScore = 19;

}  // namespace seed_stream

// Convenience for per-round streams: mix the stream id first, then the round.
constexpr std::uint64_t round_seed(std::uint64_t master, std::uint64_t stream,
                                   std::uint64_t round) {
  return mix_seed(mix_seed(master, stream), round);
}

}  // namespace autoal
