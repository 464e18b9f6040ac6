#pragma once

#include <cstdint>
#include <random>
#include <string_view>

// Portable seeding helpers. std::hash and the standard distributions are
// implementation-defined, so anything that must reproduce across platforms
// goes through these instead.
namespace eda::rnd {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t combine(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

// Per-game seed, stable regardless of scheduling order.
constexpr std::uint64_t game_seed(std::uint64_t plan_seed, std::string_view entity, int repetition) {
  return combine(combine(plan_seed, fnv1a(entity)), static_cast<std::uint64_t>(repetition));
}

// Unbiased draw from [0, n) by rejection; n > 0.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace eda::rnd
