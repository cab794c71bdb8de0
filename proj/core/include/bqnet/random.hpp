#pragma once

#include <cstdint>
#include <random>

namespace bqnet {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent per-replication seeds
// from a master seed and a counter.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline Rng substream(std::uint64_t master_seed, std::uint64_t counter) {
  return Rng(splitmix64(master_seed ^ splitmix64(counter)));
}

}  // namespace bqnet
