#pragma once

#include <cstdint>
#include <random>

namespace bcirepair {

using Engine = std::mt19937_64;

// Independent engine for a (seed, stream) pair. Stream ids keep the different
// consumers of one trial seed (split rotation, thinning, acquisition, ...)
// decorrelated.
inline Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Engine(seq);
}

namespace streams {
inline constexpr std::uint64_t kSplit = 1;
inline constexpr std::uint64_t kDiscard = 2;
inline constexpr std::uint64_t kThin = 3;
inline constexpr std::uint64_t kAcquire = 4;
inline constexpr std::uint64_t kGenerate = 5;
inline constexpr std::uint64_t kInject = 6;
}  // namespace streams

}  // namespace bcirepair
