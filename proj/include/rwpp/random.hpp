#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace rwpp {

/// Random stream used by every sampler. Callers own one per thread.
using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

} // namespace detail

/// Derives a child seed from (seed, index). Counter-based: the result for a
/// given index does not depend on how many other children were derived.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return detail::splitmix64(detail::splitmix64(seed) ^ detail::splitmix64(index + 0x632BE59BD9B4E019ull));
}

/// Independent stream for work unit `index` under a master seed.
inline Rng substream(std::uint64_t master_seed, std::uint64_t index) {
  const std::uint64_t s = derive_seed(master_seed, index);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

/// Uniform draw on (0, 1].
inline double uniform_open_closed(Rng& rng) {
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

/// Uniform draw on [0, 1).
inline double uniform_closed_open(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Box-Muller draw. Uses exactly two engine outputs, so streams stay
/// reproducible across standard library implementations.
inline double standard_normal(Rng& rng) {
  const double u1 = uniform_open_closed(rng);
  const double u2 = uniform_closed_open(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace rwpp
