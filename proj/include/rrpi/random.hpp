#pragma once

#include <cstdint>
#include <random>

namespace rrpi {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream seed for a (seed, i, j) triple. Used to give every (state, action)
/// pair, or every (trial, variant), an independent generator, so results do not
/// depend on evaluation order.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t i,
                                    std::uint64_t j = 0) noexcept {
  return mix64(mix64(mix64(seed) ^ i) ^ (j + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t i = 0, std::uint64_t j = 0) {
  return Rng(stream_seed(seed, i, j));
}

}  // namespace rrpi
