// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <stdexcept>

#include "coalsim/distributions.hpp"
#include "coalsim/rng.hpp"

namespace coalsim {

/// Branching rate of the continuous-state branching diffusion
/// d xi = sqrt(gamma * xi) dB.
struct FellerParams {
  double gamma = 1.0;
};

/// Dimension of the squared Bessel diffusion d xi = 2 sqrt(xi) dB + delta dt.
struct BesqParams {
  double delta = 0.0;
};

/// E[exp(-lambda * xi(t)) | xi(0) = x] = exp(-2 lambda x / (2 + lambda
/// gamma t)) for the Feller branching diffusion.
inline double feller_laplace(double lambda, double x, double t, double gamma) {
  if (!(lambda >= 0.0) || !(x >= 0.0) || !(t > 0.0) || !(gamma > 0.0) ||
      !std::isfinite(lambda) || !std::isfinite(x))
    throw std::invalid_argument("feller_laplace: arguments out of range");
  return std::exp(-2.0 * lambda * x / (2.0 + lambda * gamma * t));
}

/// P{xi(t) = 0 | xi(0) = x} = exp(-2x / (gamma t)).
inline double feller_extinction_probability(double x, double t, double gamma) {
  if (!(x >= 0.0) || !(t > 0.0) || !(gamma > 0.0))
    throw std::invalid_argument(
        "feller_extinction_probability: arguments out of range");
  return std::exp(-2.0 * x / (gamma * t));
}

/// One exact transition of the Feller branching diffusion over time t.
///
/// The transition law is compound Poisson: N ~ Poisson(2x / (gamma t))
/// jumps, each Exponential with mean gamma t / 2, so conditionally on N the
/// value is Gamma(N, gamma t / 2).  Its Laplace transform
///   exp(-theta * lambda m0 / (1 + lambda m0)),  theta = 2x/(gamma t),
///   m0 = gamma t / 2,
/// reduces to exp(-2 lambda x / (2 + lambda gamma t)), the transition
/// transform above; the N = 0 branch realizes the extinction atom at 0
/// exactly.
inline double feller_transition(double x, double t, FellerParams params,
                                RngStream& rng) {
  if (!(x >= 0.0)) throw std::invalid_argument("feller_transition: x < 0");
  if (!(t > 0.0)) throw std::invalid_argument("feller_transition: t <= 0");
  if (!(params.gamma > 0.0))
    throw std::invalid_argument("feller_transition: gamma <= 0");
  if (x == 0.0) return 0.0;
  const double mean_jump = 0.5 * params.gamma * t;
  const long long n = draw_poisson(rng, x / mean_jump);
  if (n == 0) return 0.0;
  return draw_gamma(rng, static_cast<double>(n), mean_jump);
}

/// E[exp(-lambda xi_t)] = (1 + 2 lambda t)^(-delta/2) *
/// exp(-lambda x / (1 + 2 lambda t)) for the squared Bessel diffusion.
inline double besq_laplace(double lambda, double x, double t, double delta) {
  if (!(lambda >= 0.0) || !(x >= 0.0) || !(t > 0.0) || !(delta >= 0.0))
    throw std::invalid_argument("besq_laplace: arguments out of range");
  const double denom = 1.0 + 2.0 * lambda * t;
  return std::pow(denom, -0.5 * delta) * std::exp(-lambda * x / denom);
}

/// One exact transition of the squared Bessel diffusion over time t.
///
/// Poisson-Gamma mixture: K ~ Poisson(x / (2t)), value ~ Gamma(delta/2 + K,
/// scale 2t).  Averaging the conditional transform (1 + 2 lambda t)^-(d/2+K)
/// over K reproduces the transition transform above; shape 0 gives the point
/// mass at 0.  The delta = 0 case coincides with the Feller law at gamma = 4.
inline double besq_transition(double x, double t, BesqParams params,
                              RngStream& rng) {
  if (!(x >= 0.0)) throw std::invalid_argument("besq_transition: x < 0");
  if (!(t > 0.0)) throw std::invalid_argument("besq_transition: t <= 0");
  if (!(params.delta >= 0.0))
    throw std::invalid_argument("besq_transition: delta < 0");
  const long long k = x > 0.0 ? draw_poisson(rng, x / (2.0 * t)) : 0;
  const double shape = 0.5 * params.delta + static_cast<double>(k);
  if (shape == 0.0) return 0.0;
  return draw_gamma(rng, shape, 2.0 * t);
}

}  // namespace coalsim
