#pragma once

#include <cmath>
#include <cstdint>

#include "drhmc/errors.hpp"

namespace drhmc {

// digamma(x) = d/dx log Gamma(x) for x > 0, via the ascending recurrence
// followed by the asymptotic Bernoulli series. Absolute accuracy ~1e-13.
inline double digamma(double x) {
  if (!(x > 0.0)) throw DomainError("digamma: argument must be positive");
  double acc = 0.0;
  while (x < 8.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // B_2/2 x^-2, B_4/4 x^-4, ...
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 -
                                              inv2 * (691.0 / 32760.0))))));
  return acc + std::log(x) - 0.5 * inv - series;
}

// trigamma(x) = d^2/dx^2 log Gamma(x) for x > 0. Same scheme as digamma.
inline double trigamma(double x) {
  if (!(x > 0.0)) throw DomainError("trigamma: argument must be positive");
  double acc = 0.0;
  while (x < 8.0) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      1.0 + inv * 0.5 +
      inv2 * (1.0 / 6.0 -
              inv2 * (1.0 / 30.0 -
                      inv2 * (1.0 / 42.0 -
                              inv2 * (1.0 / 30.0 -
                                      inv2 * (5.0 / 66.0)))));
  return acc + inv * series;
}

// Phi(x), the standard normal CDF.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// splitmix64 mixing step; used to derive independent per-chain RNG seeds.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace drhmc
