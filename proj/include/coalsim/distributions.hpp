// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <stdexcept>

#include "coalsim/rng.hpp"

namespace coalsim {

/// N(mean, sd^2) by Box-Muller (exact in distribution).
inline double draw_normal(RngStream& rng, double mean = 0.0, double sd = 1.0) {
  if (!(sd >= 0.0)) throw std::invalid_argument("draw_normal: sd must be >= 0");
  if (sd == 0.0) return mean;
  const double u1 = rng.uniform01_open_left();
  const double u2 = rng.uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + sd * r * std::cos(6.283185307179586477 * u2);
}

/// Exponential with the given mean, by inversion.
inline double draw_exponential(RngStream& rng, double mean) {
  if (!(mean > 0.0))
    throw std::invalid_argument("draw_exponential: mean must be > 0");
  return -mean * std::log(rng.uniform01_open_left());
}

namespace detail {

// Devroye's multiplication method; fine for small rates.
inline long long poisson_small(RngStream& rng, double rate) {
  const double limit = std::exp(-rate);
  long long k = 0;
  double prod = rng.uniform01_open_left();
  while (prod > limit) {
    ++k;
    prod *= rng.uniform01_open_left();
  }
  return k;
}

// Hoermann's PTRS transformed rejection (exact), for rate >= 10.
inline long long poisson_ptrs(RngStream& rng, double rate) {
  const double log_rate = std::log(rate);
  const double b = 0.931 + 2.53 * std::sqrt(rate);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform01() - 0.5;
    const double v = rng.uniform01_open_left();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + rate + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long long>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
    const double rhs = kf * log_rate - rate - std::lgamma(kf + 1.0);
    if (lhs <= rhs) return static_cast<long long>(kf);
  }
}

}  // namespace detail

/// Poisson(rate) variate, exact in distribution for all finite rates.
inline long long draw_poisson(RngStream& rng, double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate))
    throw std::invalid_argument("draw_poisson: rate must be finite and >= 0");
  if (rate == 0.0) return 0;
  if (rate < 10.0) return detail::poisson_small(rng, rate);
  return detail::poisson_ptrs(rng, rate);
}

/// Gamma(shape, scale) by Marsaglia-Tsang squeeze rejection (exact); the
/// shape < 1 case boosts through Gamma(shape + 1) * U^(1/shape).
/// shape == 0 is the degenerate law at 0.
inline double draw_gamma(RngStream& rng, double shape, double scale) {
  if (!(shape >= 0.0))
    throw std::invalid_argument("draw_gamma: shape must be >= 0");
  if (!(scale > 0.0))
    throw std::invalid_argument("draw_gamma: scale must be > 0");
  if (shape == 0.0) return 0.0;
  double boost = 1.0;
  double a = shape;
  if (a < 1.0) {
    boost = std::pow(rng.uniform01_open_left(), 1.0 / a);
    a += 1.0;
  }
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = draw_normal(rng);
    const double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = rng.uniform01_open_left();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return boost * d * v * scale;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v)))
      return boost * d * v * scale;
  }
}

}  // namespace coalsim
