#pragma once

#include <cstdint>
#include <random>

namespace pfode {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based substream seed: a task never shares generator state with
/// another task, so parallel and serial runs draw identical numbers.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index));
}

inline Rng substream(std::uint64_t seed, std::uint64_t index) {
  return Rng(derive_seed(seed, index));
}

// Stream tags for independent families of substreams under one run seed.
inline constexpr std::uint64_t kPriorStream = 0x5052494F52ULL;
inline constexpr std::uint64_t kPathNoiseStream = 0x504154484EULL;
inline constexpr std::uint64_t kDataStream = 0x44415441ULL;
inline constexpr std::uint64_t kTrainStream = 0x545241494EULL;

}  // namespace pfode
