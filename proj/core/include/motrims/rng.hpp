#pragma once

#include <cstdint>
#include <random>

namespace motrims {

// SplitMix64 finalizer; used only to derive well-separated engine seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent substream for (seed, stream, index). Every stochastic draw in the
// library goes through one of these, so results do not depend on how work is
// split between threads.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return std::mt19937_64(mix64(mix64(seed ^ mix64(stream)) + index));
}

// Stream identifiers.
namespace streams {
inline constexpr std::uint64_t kRecoilSampling = 1;
inline constexpr std::uint64_t kIonization = 2;
inline constexpr std::uint64_t kDetector = 3;
inline constexpr std::uint64_t kSynthetic = 4;
}  // namespace streams

}  // namespace motrims
