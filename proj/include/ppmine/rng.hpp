#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace ppmine {

inline constexpr std::uint64_t fnv1a64_offset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t fnv1a64_prime = 0x100000001b3ull;

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t state = fnv1a64_offset) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = state;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= fnv1a64_prime;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t state = fnv1a64_offset) {
  return fnv1a64(s.data(), s.size(), state);
}

// Deterministic sub-stream seed: hash the base seed (as 8 big-endian bytes)
// followed by a purpose tag, so distinct components never share a stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i)
    bytes[i] = static_cast<unsigned char>(base >> (56 - 8 * i));
  return fnv1a64(tag, fnv1a64(bytes, 8));
}

// Uniform draw in [0, n) by rejection, so results are identical on every
// platform (std::uniform_int_distribution is implementation-defined).
inline std::uint64_t bounded_uniform(std::mt19937_64& gen, std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t draw;
  do {
    draw = gen();
  } while (draw >= limit);
  return draw % n;
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

}  // namespace ppmine
