#pragma once

#include <cstdint>
#include <random>

namespace dfm {

/// splitmix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of child stream `index` under `parent`. Recorded verbatim in meta.json.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return splitmix64(parent ^ splitmix64(index));
}

inline constexpr const char* kSeedDerivation =
    "seed_k = splitmix64(master_seed ^ splitmix64(k)), "
    "splitmix64(x) = mix of x + 0x9E3779B97F4A7C15 (Steele et al. finalizer); "
    "k = global trajectory index; stream = mt19937_64(seed_k)";

/// Uniform integer in [0, n) by rejection, independent of the standard
/// library's distribution implementations.
inline std::uint64_t uniform_below(std::mt19937_64& gen, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = gen();
  } while (x >= limit);
  return x % n;
}

}  // namespace dfm
