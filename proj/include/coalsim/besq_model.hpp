// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "coalsim/branching.hpp"
#include "coalsim/brownian.hpp"
#include "coalsim/measures.hpp"
#include "coalsim/parallel.hpp"
#include "coalsim/scsm.hpp"
#include "coalsim/stats.hpp"

namespace coalsim {

struct MassDimensionSample {
  AtomicMeasure mass;       // sum_i xi_i(t) delta_{X_i(t)}
  AtomicMeasure dimension;  // (1/m) sum_i d_i dbar delta_{X_i(t)}
};

/// One replicate of the mass-dimension particle system: particle i draws a
/// dimension d_i from the normalized dimension measure, its mass runs one
/// exact squared-Bessel transition of dimension d_i * dbar / m started from
/// zbar / m, and positions run the coalescing motion.  Dimension atoms carry
/// the conserved weights d_i * dbar / m.
inline MassDimensionSample besq_model_simulate(const InitialMeasure& z0,
                                               const DimensionSpec& dim,
                                               int m, double t, double step,
                                               RngStream& rng) {
  dim.validate();
  if (m <= 0) throw std::invalid_argument("besq_model_simulate: m <= 0");
  const double dbar = dim.total();
  ParticleCloud cloud = init_particles(z0, m, rng);
  std::sort(cloud.positions.begin(), cloud.positions.end());
  std::vector<double> dim_weight(m, 0.0);
  for (int i = 0; i < m; ++i) {
    const double d_i = dbar > 0.0 ? dim.measure.sample(rng) : 0.0;
    dim_weight[i] = d_i * dbar / static_cast<double>(m);
  }
  const double x0 = z0.total_mass() / static_cast<double>(m);
  for (int i = 0; i < m; ++i)
    cloud.masses[i] = besq_transition(x0, t, BesqParams{dim_weight[i]}, rng);
  const BmState end_state =
      coalescing_bm(make_bm_state(cloud.positions), t, step, rng);
  MassDimensionSample out;
  out.mass = make_atomic_measure(end_state.positions, cloud.masses);
  out.dimension = make_atomic_measure(end_state.positions, dim_weight);
  return out;
}

struct MassDimensionDualityReport {
  MCEstimate forward;    // A: forward simulation of the joint functional
  MCEstimate dual;       // B: duality form with frozen initial data
  MCEstimate limit;      // C: the closed high-density limit formula
  double z_forward_dual = 0.0;
  double z_forward_limit = 0.0;
};

/// Three routes to E[exp(-sum_j alpha_j Z_t(I_j) - sum_j beta_j
/// Delta_t(I_j))].
///
/// A simulates the m-particle system forward.  B freezes the initial
/// positions and dimensions, runs the dual coalescing system from the
/// interval endpoints, and pays exp(-sum_i xi_i(t) I(x_i) - sum_i
/// (d_i dbar / m) J(x_i)); A and B agree in law at every m.  C evaluates
/// the limit formula: for x in dual interval j the integrand is
/// (mu / (2 zbar)) ln(1 + 2 t alpha_j) + alpha_j / (1 + 2 t alpha_j)
/// + (mu / zbar) beta_j, integrated against the initial measure, so A
/// matches C up to O(1/m) at large m.
inline MassDimensionDualityReport besq_duality_check(
    const InitialMeasure& z0, const DimensionSpec& dim, int m, double t,
    const IntervalUnion& u, double step, std::size_t replicates,
    std::uint64_t seed, std::uint64_t stream_base, int threads) {
  u.validate();
  if (u.weights_b.size() != u.weights.size())
    throw std::invalid_argument("besq_duality_check: need (alpha, beta) pairs");
  dim.validate();
  const double zbar = z0.total_mass();
  const double dbar = dim.total();
  const double mu = dim.mean();

  MassDimensionDualityReport rep;
  rep.forward = monte_carlo(
      seed, stream_base, replicates, threads, [&](RngStream& rng, std::size_t) {
        const MassDimensionSample s =
            besq_model_simulate(z0, dim, m, t, step, rng);
        double acc = 0.0;
        for (std::size_t j = 0; j < u.interval_count(); ++j) {
          const double a = u.endpoints[2 * j], b = u.endpoints[2 * j + 1];
          acc += u.weights[j] * s.mass.interval_mass(a, b) +
                 u.weights_b[j] * s.dimension.interval_mass(a, b);
        }
        return std::exp(-acc);
      });

  rep.dual = monte_carlo(
      seed, stream_base + (std::uint64_t{1} << 32), replicates, threads,
      [&](RngStream& rng, std::size_t) {
        ParticleCloud cloud = init_particles(z0, m, rng);
        std::vector<double> dim_weight(m, 0.0);
        for (int i = 0; i < m; ++i) {
          const double d_i = dbar > 0.0 ? dim.measure.sample(rng) : 0.0;
          dim_weight[i] = d_i * dbar / static_cast<double>(m);
        }
        const double x0 = zbar / static_cast<double>(m);
        std::vector<double> xi(m, 0.0);
        for (int i = 0; i < m; ++i)
          xi[i] = besq_transition(x0, t, BesqParams{dim_weight[i]}, rng);
        const std::vector<double> y = dual_endpoints(u.endpoints, t, step, rng);
        double acc = 0.0;
        for (int i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < u.interval_count(); ++j) {
            if (cloud.positions[i] > y[2 * j] &&
                cloud.positions[i] <= y[2 * j + 1]) {
              acc += xi[i] * u.weights[j] + dim_weight[i] * u.weights_b[j];
              break;  // dual intervals are disjoint
            }
          }
        }
        return std::exp(-acc);
      });

  std::vector<double> limit_weight(u.interval_count());
  for (std::size_t j = 0; j < limit_weight.size(); ++j) {
    const double alpha = u.weights[j];
    const double beta = u.weights_b[j];
    limit_weight[j] = (mu / (2.0 * zbar)) * std::log1p(2.0 * t * alpha) +
                      alpha / (1.0 + 2.0 * t * alpha) + (mu / zbar) * beta;
  }
  rep.limit = monte_carlo(
      seed, stream_base + (std::uint64_t{2} << 32), replicates, threads,
      [&](RngStream& rng, std::size_t) {
        const std::vector<double> y = dual_endpoints(u.endpoints, t, step, rng);
        double acc = 0.0;
        for (std::size_t j = 0; j < limit_weight.size(); ++j)
          acc += limit_weight[j] * z0.interval_mass(y[2 * j], y[2 * j + 1]);
        return std::exp(-acc);
      });

  rep.z_forward_dual = two_sample_z(rep.forward, rep.dual);
  rep.z_forward_limit = two_sample_z(rep.forward, rep.limit);
  return rep;
}

}  // namespace coalsim
