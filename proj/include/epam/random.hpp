#pragma once

#include <cstdint>
#include <random>

namespace epam::random {

/// Unbiased draw from [0, n) by rejection; the sequence depends only on the
/// engine, not on the standard library's distribution implementations.
inline std::size_t bounded(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % range;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return static_cast<std::size_t>(v % range);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

double standard_normal(std::mt19937_64& rng);

/// Mean-one lognormal factor with coefficient of variation `cv`.
double lognormal_factor(std::mt19937_64& rng, double cv);

}  // namespace epam::random
