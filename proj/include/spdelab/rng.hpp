#pragma once

#include <cmath>
#include <cstdint>

namespace spde::rng {

/// Counter-based random number generation. Every draw is a pure function of a
/// 4-tuple key (seed, path index, component, step), so ensembles can be
/// evaluated in any order and on any number of threads while remaining
/// bit-identical. There is no generator state to advance or share.

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t key4(std::uint64_t seed, std::uint64_t a,
                          std::uint64_t b, std::uint64_t c) noexcept {
  std::uint64_t h = splitmix64(seed ^ 0x243F6A8885A308D3ull);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ c);
  return h;
}

/// Maps 64 random bits to the open interval (0, 1); never returns 0 or 1, so
/// log() below is always finite.
inline double unit_open(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal draw keyed by (seed, path, component, step) via Box-Muller.
inline double normal(std::uint64_t seed, std::uint64_t path,
                     std::uint64_t component, std::uint64_t step) noexcept {
  const std::uint64_t k = key4(seed, path, component, step);
  const double u1 = unit_open(k);
  const double u2 = unit_open(splitmix64(k));
  constexpr double two_pi = 6.283185307179586476925287;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

/// Uniform draw on (0, 1) keyed by (seed, a, b, c). Call sites that are not
/// noise increments pass a distinct stream tag in one of the key slots to
/// keep streams disjoint from path sampling.
inline double uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                      std::uint64_t c) noexcept {
  return unit_open(key4(seed, a, b, c));
}

/// Stream tags for auxiliary (non-increment) draws.
inline constexpr std::uint64_t kStreamValidate = 0x76616C6964617465ull;
inline constexpr std::uint64_t kStreamManifold = 0x6D616E69666F6C64ull;
inline constexpr std::uint64_t kStreamZeta = 0x7A6574612D736574ull;
inline constexpr std::uint64_t kStreamInitial = 0x696E697469616C73ull;

}  // namespace spde::rng
