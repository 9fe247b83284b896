#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mass {

// splitmix64 step; used to derive independent seed streams from a root seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d2a68b971f4135ULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  return splitmix64(seed ^ splitmix64(salt));
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(seed, a), b);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                              std::uint64_t c) {
  return mix_seed(mix_seed(seed, a, b), c);
}

// Stable 64-bit string hash (FNV-1a), for salting seeds with names and for
// content-addressed cache keys.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view salt) {
  return mix_seed(seed, fnv1a64(salt));
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view salt,
                              std::uint64_t a) {
  return mix_seed(mix_seed(seed, salt), a);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view salt,
                              std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(seed, salt, a), b);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(splitmix64(seed));
}

}  // namespace mass
