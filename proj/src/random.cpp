#include "epam/random.hpp"

#include <cmath>
#include <numbers>

namespace epam::random {

// Box-Muller on the portable uniform above; one variate per call keeps the
// stream position independent of caller history.
double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double lognormal_factor(std::mt19937_64& rng, double cv) {
  if (cv <= 0.0) return 1.0;
  const double s2 = std::log1p(cv * cv);
  return std::exp(-0.5 * s2 + std::sqrt(s2) * standard_normal(rng));
}

}  // namespace epam::random
