#pragma once

#include <cstdint>
#include <random>

namespace cbranch {

/// Per-trial generator. Streams are std::mt19937_64 instances seeded with
/// stream_seed(master, trial).
using Rng = std::mt19937_64;

/// SplitMix64 finalizer: a bijection on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for trial `trial` under `master`: splitmix64(splitmix64(master) +
/// trial * golden). For a fixed master the inner argument is injective in
/// the trial index (the golden constant is odd) and splitmix64 is a
/// bijection, so distinct trials below 2^64 never share a seed.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t trial) {
  return splitmix64(splitmix64(master) + trial * 0x9e3779b97f4a7c15ULL);
}

inline Rng make_stream(std::uint64_t master, std::uint64_t trial) {
  return Rng(stream_seed(master, trial));
}

/// Uniform double in [0, 1) from the top 53 bits; independent of the
/// standard library's distribution implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace cbranch
