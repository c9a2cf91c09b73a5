#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace raw {

// All randomness in the project flows from one master seed, fanned out into
// named substreams so that subsystems ("world", "init", "train", ...) are
// independently reproducible no matter what order they run in.

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t derive_seed(uint64_t master, std::string_view stream) {
  return splitmix64(master ^ fnv1a64(stream));
}

inline uint64_t derive_seed(uint64_t master, std::string_view stream, uint64_t index) {
  return splitmix64(derive_seed(master, stream) ^ splitmix64(index));
}

inline std::mt19937_64 make_rng(uint64_t master, std::string_view stream) {
  return std::mt19937_64(derive_seed(master, stream));
}

inline std::mt19937_64 make_rng(uint64_t master, std::string_view stream, uint64_t index) {
  return std::mt19937_64(derive_seed(master, stream, index));
}

}  // namespace raw
