// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "coalsim/brownian.hpp"
#include "coalsim/measures.hpp"
#include "coalsim/parallel.hpp"
#include "coalsim/quadrature.hpp"
#include "coalsim/special_functions.hpp"
#include "coalsim/stats.hpp"

namespace coalsim {

/// Coordinates rotated by pi/4: x~ = (x-y)/sqrt2, y~ = (x+y)/sqrt2,
/// a~ = (a+b)/sqrt2, b~ = (b-a)/sqrt2.  The rotation is an isometry.
struct TiltedCoords {
  double x_tilt = 0.0;
  double y_tilt = 0.0;
  double a_tilt = 0.0;
  double b_tilt = 0.0;
};

inline TiltedCoords rotate_coords(double x, double y, double a, double b) {
  const double inv_sqrt2 = 0.70710678118654752440;
  return TiltedCoords{(x - y) * inv_sqrt2, (x + y) * inv_sqrt2,
                      (a + b) * inv_sqrt2, (b - a) * inv_sqrt2};
}

namespace detail {

// E[g(]Y1(t), Y2(t)])] for the exact coalescing pair from (a, b), as a 2-D
// quadrature in the rotated plane: the u-coordinate is N(a~, t), the
// v-coordinate carries the absorbed density p_t(b~, v) - p_t(b~, -v) on
// v > 0, and the coalescence atom (empty interval) contributes
// g_empty * 2 Phi-bar(b~ / sqrt t).  `g` maps the interval ](u-v)/sqrt2,
// (u+v)/sqrt2] to a value; `disc` lists CDF discontinuity locations used as
// quadrature split hints along the lines u -+ v = sqrt2 * c.
template <class G>
QuadratureResult absorbed_pair_quadrature(const G& g, double g_empty, double a,
                                          double b, double t,
                                          std::span<const double> disc,
                                          const QuadratureSpec& spec) {
  const double sqrt2 = 1.4142135623730950488;
  const double a_rot = (a + b) / sqrt2;
  const double b_rot = (b - a) / sqrt2;
  const double sqrt_t = std::sqrt(t);
  const double pad = spec.trunc_sigmas * sqrt_t;
  const double x_lo = a_rot - pad, x_hi = a_rot + pad;
  const double y_hi = b_rot + pad;
  const double inv_2pit = 1.0 / (6.2831853071795864769 * t);

  std::vector<double> outer_hints;
  for (double c : disc) outer_hints.push_back(sqrt2 * c + b_rot);
  for (double c : disc) outer_hints.push_back(sqrt2 * c - b_rot);
  outer_hints.push_back(a_rot);

  auto f = [&](double x, double y) {
    const double lo = (x - y) / sqrt2;
    const double hi = (x + y) / sqrt2;
    const double dx = (x - a_rot);
    const double dy = (y - b_rot);
    const double gauss = std::exp(-(dx * dx + dy * dy) / (2.0 * t));
    const double absorb = -std::expm1(-2.0 * y * b_rot / t);
    return g(lo, hi) * gauss * absorb;
  };
  auto inner_hints = [&](double x) {
    std::vector<double> h;
    for (double c : disc) {
      const double y1 = x - sqrt2 * c;
      if (y1 > 0.0 && y1 < y_hi) h.push_back(y1);
      const double y2 = sqrt2 * c - x;
      if (y2 > 0.0 && y2 < y_hi) h.push_back(y2);
    }
    return h;
  };
  QuadratureResult res =
      integrate_2d(f, x_lo, x_hi, 0.0, y_hi, spec, outer_hints, inner_hints);
  res.value = res.value * inv_2pit + g_empty * 2.0 * normal_sf(b_rot / sqrt_t);
  res.error *= inv_2pit;
  return res;
}

// 2-D quadrature of y * exp(-y^2 / 2t) * weight(x) * g(]x~, y~]) over
// x in [x_lo, x_hi], y > 0; shared by the support-count and
// single-survivor kernels after their z-integrals are taken in closed form.
template <class G, class W>
QuadratureResult tilted_strip_quadrature(const G& g, const W& weight,
                                         double x_lo, double x_hi, double t,
                                         std::span<const double> disc,
                                         const QuadratureSpec& spec) {
  const double sqrt2 = 1.4142135623730950488;
  const double sqrt_t = std::sqrt(t);
  const double y_hi = spec.trunc_sigmas * sqrt_t;
  std::vector<double> outer_hints;
  for (double c : disc) outer_hints.push_back(sqrt2 * c);
  auto f = [&](double x, double y) {
    const double lo = (x - y) / sqrt2;
    const double hi = (x + y) / sqrt2;
    return y * std::exp(-y * y / (2.0 * t)) * weight(x) * g(lo, hi);
  };
  auto inner_hints = [&](double x) {
    std::vector<double> h;
    for (double c : disc) {
      const double d = std::fabs(x - sqrt2 * c);
      if (d > 0.0 && d < y_hi) h.push_back(d);
    }
    return h;
  };
  return integrate_2d(f, x_lo, x_hi, 0.0, y_hi, spec, outer_hints,
                      inner_hints);
}

inline void require_interval(double a, double b, double t) {
  if (!(a < b)) throw std::invalid_argument("closed form: need a < b");
  if (!(t > 0.0)) throw std::invalid_argument("closed form: need t > 0");
}

}  // namespace detail

/// P{Z_t(]a, b]) = 0}: the absorbed-pair expectation of
/// exp(-2 Z_0(]x~, y~]) / (t gamma)), empty interval worth 1.
inline double prob_interval_empty(const InitialMeasure& z0, double a, double b,
                                  double t, double gamma,
                                  const QuadratureSpec& spec = {}) {
  detail::require_interval(a, b, t);
  const double c = 2.0 / (t * gamma);
  auto g = [&](double lo, double hi) {
    return std::exp(-c * z0.interval_mass(lo, hi));
  };
  return detail::absorbed_pair_quadrature(g, 1.0, a, b, t,
                                          z0.discontinuities(), spec)
      .value;
}

/// Same expectation estimated by Monte Carlo on the exact coalescing pair;
/// doubles as the dual-side estimator and as the transcription oracle for
/// the quadrature kernel.
inline MCEstimate prob_interval_empty_mc(const InitialMeasure& z0, double a,
                                         double b, double t, double gamma,
                                         std::size_t replicates,
                                         std::uint64_t seed,
                                         std::uint64_t stream_base,
                                         int threads) {
  detail::require_interval(a, b, t);
  const double c = 2.0 / (t * gamma);
  return monte_carlo(seed, stream_base, replicates, threads,
                     [&](RngStream& rng, std::size_t) {
                       const PairSample p = coalescing_pair_exact(a, b, t, rng);
                       return std::exp(-c * z0.interval_mass(p.y1, p.y2));
                     });
}

/// E[#(support of Z_t) in ]a, b]] =
///   (b-a)/sqrt(pi t) * (1 - E[exp(-2 Z_0(]x~, y~]) / (t gamma))])
/// with x integrated against the window profile
/// Phi((sqrt2 b - x)/sqrt t) - Phi((sqrt2 a - x)/sqrt t): the z-integral of
/// the printed triple integral taken in closed form.
inline double expected_support_count(const InitialMeasure& z0, double a,
                                     double b, double t, double gamma,
                                     const QuadratureSpec& spec = {}) {
  detail::require_interval(a, b, t);
  const double sqrt2 = 1.4142135623730950488;
  const double sqrt_t = std::sqrt(t);
  const double lead = (b - a) / std::sqrt(3.1415926535897932385 * t);
  const double c = 2.0 / (t * gamma);
  auto g = [&](double lo, double hi) {
    return std::exp(-c * z0.interval_mass(lo, hi));
  };
  auto weight = [&](double x) {
    return normal_cdf((sqrt2 * b - x) / sqrt_t) -
           normal_cdf((sqrt2 * a - x) / sqrt_t);
  };
  const double pad = spec.trunc_sigmas * sqrt_t;
  const QuadratureResult inner = detail::tilted_strip_quadrature(
      g, weight, sqrt2 * a - pad, sqrt2 * b + pad, t, z0.discontinuities(),
      spec);
  const double coeff =
      1.0 / (sqrt2 * std::sqrt(3.1415926535897932385) * t * sqrt_t);
  return lead - coeff * inner.value;
}

/// Monte Carlo of the identical integrand: z ~ U(a,b), x ~ N(sqrt2 z, t),
/// y ~ Rayleigh(sqrt t) turn the printed triple integral into
/// (b-a)/sqrt(pi t) * E[1 - exp(-2 Z_0(]x~, y~]) / (t gamma))].
inline MCEstimate expected_support_count_mc(const InitialMeasure& z0, double a,
                                            double b, double t, double gamma,
                                            std::size_t replicates,
                                            std::uint64_t seed,
                                            std::uint64_t stream_base,
                                            int threads) {
  detail::require_interval(a, b, t);
  const double sqrt2 = 1.4142135623730950488;
  const double sqrt_t = std::sqrt(t);
  const double c = 2.0 / (t * gamma);
  const double lead = (b - a) / std::sqrt(3.1415926535897932385 * t);
  return monte_carlo(
      seed, stream_base, replicates, threads, [&](RngStream& rng, std::size_t) {
        const double z = a + (b - a) * rng.uniform01();
        const double x = draw_normal(rng, sqrt2 * z, sqrt_t);
        const double y =
            sqrt_t * std::sqrt(-2.0 * std::log(rng.uniform01_open_left()));
        const double q = z0.interval_mass((x - y) / sqrt2, (x + y) / sqrt2);
        return lead * -std::expm1(-c * q);
      });
}

/// E[exp(-lambda Z_t(]a,b])); Z_t(]a,b]) > 0]: the difference of two
/// absorbed-pair expectations with exponent weights 2 lambda / (2 + lambda
/// gamma t) and 2 / (gamma t); the coalescence atoms cancel.
inline double point_mass_laplace_interval(const InitialMeasure& z0, double a,
                                          double b, double t, double gamma,
                                          double lambda,
                                          const QuadratureSpec& spec = {}) {
  detail::require_interval(a, b, t);
  if (!(lambda >= 0.0))
    throw std::invalid_argument("point_mass_laplace_interval: lambda < 0");
  const double w_live = 2.0 * lambda / (2.0 + lambda * gamma * t);
  const double w_dead = 2.0 / (gamma * t);
  auto g = [&](double lo, double hi) {
    const double q = z0.interval_mass(lo, hi);
    return std::exp(-w_live * q) - std::exp(-w_dead * q);
  };
  return detail::absorbed_pair_quadrature(g, 0.0, a, b, t,
                                          z0.discontinuities(), spec)
      .value;
}

inline MCEstimate point_mass_laplace_interval_mc(
    const InitialMeasure& z0, double a, double b, double t, double gamma,
    double lambda, std::size_t replicates, std::uint64_t seed,
    std::uint64_t stream_base, int threads) {
  detail::require_interval(a, b, t);
  const double w_live = 2.0 * lambda / (2.0 + lambda * gamma * t);
  const double w_dead = 2.0 / (gamma * t);
  return monte_carlo(seed, stream_base, replicates, threads,
                     [&](RngStream& rng, std::size_t) {
                       const PairSample p = coalescing_pair_exact(a, b, t, rng);
                       const double q = z0.interval_mass(p.y1, p.y2);
                       return std::exp(-w_live * q) - std::exp(-w_dead * q);
                     });
}

/// Which constant sits in the coalescence boundary term of the
/// survivor-range formula: the printed exp(-2/(gamma t)), or the
/// total-mass form exp(-2 zbar/(gamma t)) that the main integrand attains
/// on an empty interval.  They coincide when zbar = 1.
enum class RangeBoundaryTerm { kAsPrinted, kTotalMass };

/// E[exp(-lambda Z_t(R)); Z_t != 0, support(Z_t) in (a, b)]: absorbed-pair
/// expectation of exp(-2 lambda Z_0(I)/(2 + lambda gamma t)
/// - 2 Z_0(I^c)/(gamma t)) minus the all-dead mass exp(-2 zbar/(gamma t)).
inline double last_particle_range(
    const InitialMeasure& z0, double a, double b, double t, double gamma,
    double lambda, const QuadratureSpec& spec = {},
    RangeBoundaryTerm boundary = RangeBoundaryTerm::kAsPrinted) {
  detail::require_interval(a, b, t);
  const double zbar = z0.total_mass();
  const double w_live = 2.0 * lambda / (2.0 + lambda * gamma * t);
  const double w_out = 2.0 / (gamma * t);
  auto g = [&](double lo, double hi) {
    const double q = z0.interval_mass(lo, hi);
    return std::exp(-w_live * q - w_out * (zbar - q));
  };
  const double boundary_mass =
      boundary == RangeBoundaryTerm::kAsPrinted ? 1.0 : zbar;
  const double g_empty = std::exp(-w_out * boundary_mass);
  const double main = detail::absorbed_pair_quadrature(
                          g, g_empty, a, b, t, z0.discontinuities(), spec)
                          .value;
  return main - std::exp(-w_out * zbar);
}

/// Monte Carlo of the same functional on the exact pair.  The pair sampler
/// realizes the empty interval on coalescence, so the boundary weight is
/// necessarily the total-mass one.
inline MCEstimate last_particle_range_mc(const InitialMeasure& z0, double a,
                                         double b, double t, double gamma,
                                         double lambda, std::size_t replicates,
                                         std::uint64_t seed,
                                         std::uint64_t stream_base,
                                         int threads) {
  detail::require_interval(a, b, t);
  const double zbar = z0.total_mass();
  const double w_live = 2.0 * lambda / (2.0 + lambda * gamma * t);
  const double w_out = 2.0 / (gamma * t);
  const double dead = std::exp(-w_out * zbar);
  return monte_carlo(seed, stream_base, replicates, threads,
                     [&](RngStream& rng, std::size_t) {
                       const PairSample p = coalescing_pair_exact(a, b, t, rng);
                       const double q = z0.interval_mass(p.y1, p.y2);
                       return std::exp(-w_live * q - w_out * (zbar - q)) -
                              dead;
                     });
}

/// P{extinction by time t} = exp(-2 zbar / (gamma t)).
inline double extinction_time_cdf(double zbar, double gamma, double t) {
  if (!(zbar >= 0.0) || !(gamma > 0.0) || !(t > 0.0))
    throw std::invalid_argument("extinction_time_cdf: bad arguments");
  return std::exp(-2.0 * zbar / (gamma * t));
}

/// Final-term convention for the single-survivor time CDF.  The printed
/// equation ends in "+ 1 - exp(+2 zbar/(gamma t))", which is negative and
/// contradicts the probability decomposition one display above it; the
/// extinction-probability form "+ exp(-2 zbar/(gamma t))" restores
/// P{tau < t} = P{one block alive} + P{all dead} and is the default.
enum class SurvivorFinalTerm { kExtinctionProbability, kAsPrinted };

/// P{the system is down to at most one particle by time t}.  The one-alive
/// probability integrates, over locations z, the y-weighted kernel of
/// exp(-2 Z_0(]x~,y~]^c)/(gamma t)) minus its empty-interval floor; the
/// z-integral is taken in closed form and the bracket is evaluated as
/// exp(-2 (zbar - q)/(gamma t)) - exp(-2 zbar/(gamma t)) to avoid overflow.
inline double single_survivor_time_cdf(
    const InitialMeasure& z0, double t, double gamma,
    const QuadratureSpec& spec = {},
    SurvivorFinalTerm final_term = SurvivorFinalTerm::kExtinctionProbability) {
  if (!(t > 0.0))
    throw std::invalid_argument("single_survivor_time_cdf: t <= 0");
  const double sqrt2 = 1.4142135623730950488;
  const double sqrt_t = std::sqrt(t);
  const double zbar = z0.total_mass();
  const double c = 2.0 / (gamma * t);
  const double floor = std::exp(-c * zbar);
  auto g = [&](double lo, double hi) {
    const double q = z0.interval_mass(lo, hi);
    return std::exp(-c * (zbar - q)) - floor;
  };
  auto weight = [](double) { return 1.0; };
  const double pad = spec.trunc_sigmas * sqrt_t;
  const double x_lo = sqrt2 * z0.support_min() - 2.0 * pad;
  const double x_hi = sqrt2 * z0.support_max() + 2.0 * pad;
  const QuadratureResult inner = detail::tilted_strip_quadrature(
      g, weight, x_lo, x_hi, t, z0.discontinuities(), spec);
  const double coeff =
      1.0 / (sqrt2 * std::sqrt(3.1415926535897932385) * t * sqrt_t);
  const double one_alive = coeff * inner.value;
  const double tail = final_term == SurvivorFinalTerm::kExtinctionProbability
                          ? floor
                          : 1.0 - std::exp(c * zbar);
  return one_alive + tail;
}

/// Monte Carlo of the one-alive kernel (x uniform on the hint strip,
/// y ~ Rayleigh(sqrt t)), plus the chosen final term.
inline MCEstimate single_survivor_time_mc(const InitialMeasure& z0, double t,
                                          double gamma,
                                          std::size_t replicates,
                                          std::uint64_t seed,
                                          std::uint64_t stream_base,
                                          int threads) {
  if (!(t > 0.0))
    throw std::invalid_argument("single_survivor_time_mc: t <= 0");
  const double sqrt2 = 1.4142135623730950488;
  const double sqrt_t = std::sqrt(t);
  const double zbar = z0.total_mass();
  const double c = 2.0 / (gamma * t);
  const double floor = std::exp(-c * zbar);
  const double pad = 10.0 * sqrt_t;
  const double x_lo = sqrt2 * z0.support_min() - pad;
  const double x_hi = sqrt2 * z0.support_max() + pad;
  const double coeff = (x_hi - x_lo) /
                       std::sqrt(6.2831853071795864769 * t);
  MCEstimate est = monte_carlo(
      seed, stream_base, replicates, threads, [&](RngStream& rng, std::size_t) {
        const double x = x_lo + (x_hi - x_lo) * rng.uniform01();
        const double y =
            sqrt_t * std::sqrt(-2.0 * std::log(rng.uniform01_open_left()));
        const double q = z0.interval_mass((x - y) / sqrt2, (x + y) / sqrt2);
        return coeff * (std::exp(-c * (zbar - q)) - floor);
      });
  est.mean += floor;
  return est;
}

/// P{last-particle location <= z}: a Brownian point started from the
/// normalized initial measure and stopped at an independent copy of the
/// extinction time.  With u = 2 zbar/(gamma s) the time integral becomes
/// int_0^inf e^-u mix(z, s(u)) du.
inline double last_location_cdf(const InitialMeasure& z0, double gamma,
                                double z, const QuadratureSpec& spec = {}) {
  const double zbar = z0.total_mass();
  if (!(zbar > 0.0) || !(gamma > 0.0))
    throw std::invalid_argument("last_location_cdf: bad arguments");
  auto mix_cdf = [&](double s) {
    const double sqrt_s = std::sqrt(s);
    double acc = 0.0;
    const auto& locs = z0.node_locations();
    const auto& wts = z0.node_weights();
    if (z0.is_atomic()) {
      for (std::size_t i = 0; i < locs.size(); ++i)
        acc += wts[i] * normal_cdf((z - locs[i]) / sqrt_s);
    } else {
      // Integral of Phi((z - x)/sqrt s) over each uniform piece:
      // antiderivative Psi(w) = w Phi(w) + phi(w).
      auto psi = [](double w) { return w * normal_cdf(w) + normal_pdf(w); };
      for (std::size_t j = 0; j < wts.size(); ++j) {
        const double lo = locs[j], hi = locs[j + 1];
        const double val = sqrt_s *
                           (psi((z - lo) / sqrt_s) - psi((z - hi) / sqrt_s)) /
                           (hi - lo);
        acc += wts[j] * val;
      }
    }
    return acc / zbar;
  };
  const double scale = 2.0 * zbar / gamma;
  auto f = [&](double u) { return std::exp(-u) * mix_cdf(scale / u); };
  return integrate(f, 1e-12, 46.0, spec).value;
}

/// Direct sampler of the same law: location ~ Z0/zbar, horizon
/// T = 2 zbar / (gamma E) with E ~ Exp(1), report 1{location + sqrt(T) N <= z}.
inline MCEstimate last_location_cdf_mc(const InitialMeasure& z0, double gamma,
                                       double z, std::size_t replicates,
                                       std::uint64_t seed,
                                       std::uint64_t stream_base,
                                       int threads) {
  const double zbar = z0.total_mass();
  if (!(zbar > 0.0) || !(gamma > 0.0))
    throw std::invalid_argument("last_location_cdf_mc: bad arguments");
  return monte_carlo(
      seed, stream_base, replicates, threads, [&](RngStream& rng, std::size_t) {
        const double x0 = z0.sample(rng);
        const double horizon =
            2.0 * zbar / (gamma * draw_exponential(rng, 1.0));
        return draw_normal(rng, x0, std::sqrt(horizon)) <= z ? 1.0 : 0.0;
      });
}

/// Expected time in [0, t] during which ]a, b] carries no mass:
/// int_0^t P{Z_s(]a,b]) = 0} ds.
inline double occupation_zero(const InitialMeasure& z0, double a, double b,
                              double t, double gamma,
                              const QuadratureSpec& spec = {}) {
  detail::require_interval(a, b, t);
  QuadratureSpec inner = spec;
  inner.rel_tol = std::max(spec.rel_tol, 1e-7);
  auto f = [&](double s) {
    return prob_interval_empty(z0, a, b, s, gamma, inner);
  };
  QuadratureSpec outer = spec;
  outer.rel_tol = std::max(spec.rel_tol, 1e-6);
  return integrate(f, 1e-9 * t, t, outer).value +
         (z0.interval_mass(a, b) > 0.0 ? 0.0 : 1e-9 * t);
}

}  // namespace coalsim
