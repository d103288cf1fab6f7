#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace modeldiff {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Child seed for stream `tag` of `seed`. Children of distinct tags are
// independent, so adding a consumer never shifts another consumer's stream.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return mix64(seed ^ mix64(tag + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> path) {
  for (auto tag : path) seed = derive_seed(seed, tag);
  return seed;
}

// FNV-1a, for turning identifiers into seed tags.
constexpr std::uint64_t hash_tag(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Named sub-streams used across the pipeline.
namespace stream {
inline constexpr std::uint64_t kGenerate = 1;
inline constexpr std::uint64_t kSubsample = 2;
inline constexpr std::uint64_t kSplitPoint = 3;
inline constexpr std::uint64_t kFeatureChoice = 4;
inline constexpr std::uint64_t kPerturb = 5;
inline constexpr std::uint64_t kModelF = 6;
inline constexpr std::uint64_t kModelG = 7;
inline constexpr std::uint64_t kDeltaSplit = 8;
inline constexpr std::uint64_t kDeltaTree = 9;
}  // namespace stream

// Uniform integer in [lo, hi] without relying on library distributions, whose
// output sequence is implementation-defined.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t lo, std::uint64_t hi) {
  const std::uint64_t span = hi - lo;
  if (span == ~0ULL) return rng();
  const std::uint64_t range = span + 1;
  const std::uint64_t limit = ~0ULL - (~0ULL % range);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return lo + x % range;
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Standard normal via Box-Muller (the sine branch is discarded so every call
// consumes exactly two draws).
double standard_normal(Rng& rng);

template <typename It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = uniform_index(rng, 0, i - 1);
    using std::swap;
    swap(first[i - 1], first[j]);
  }
}

}  // namespace modeldiff
