#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace pmax::rng {

// Counter-based substream derivation. Every parallel unit of work (bootstrap
// replicate j, Monte Carlo sample s, design draw) owns a generator seeded by
// mixing the master seed with its counter, so the draw sequence consumed by
// one unit never depends on scheduling or on the number of worker threads.
//
// The mix is the splitmix64 finalizer applied to a running state; it is a
// bijection per step, so distinct (seed, tags...) tuples give distinct
// states with no detectable correlation across neighboring counters.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(splitmix64(seed) ^ (0x9e3779b97f4a7c15ULL + tag));
}

template <typename... Tags>
std::uint64_t mix(std::uint64_t seed, std::uint64_t tag, Tags... rest) {
  return mix(mix(seed, tag), static_cast<std::uint64_t>(rest)...);
}

// FNV-1a, used to fold cell identifier strings into the seed chain.
inline std::uint64_t hash_string(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::mt19937_64 stream(std::uint64_t seed) { return std::mt19937_64(seed); }

template <typename... Tags>
std::mt19937_64 substream(std::uint64_t seed, Tags... tags) {
  return std::mt19937_64(mix(seed, static_cast<std::uint64_t>(tags)...));
}

// Fixed tags for the derivation tree. Values are arbitrary but frozen:
// changing any of them changes every seeded result.
enum Tag : std::uint64_t {
  kTagMixing = 1,     // mixing matrix A draws
  kTagCovariate = 2,  // covariate draws (w, v, or direct x)
  kTagNoise = 3,      // regression error draws
  kTagRepair = 4,     // rank repair diagonal draw
  kTagDrift = 5,      // local drift pilot
  kTagBootstrap = 6,  // bootstrap replicate streams
  kTagSample = 7,     // Monte Carlo per-sample seeds
};

}  // namespace pmax::rng
