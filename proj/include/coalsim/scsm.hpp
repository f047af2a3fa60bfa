// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "coalsim/branching.hpp"
#include "coalsim/brownian.hpp"
#include "coalsim/measures.hpp"
#include "coalsim/parallel.hpp"
#include "coalsim/rng.hpp"
#include "coalsim/stats.hpp"

namespace coalsim {

struct ParticleCloud {
  std::vector<double> positions;  // i.i.d. draws, in draw order
  std::vector<double> masses;     // total_mass / m each
};

/// m particles at i.i.d. positions from the normalized initial measure,
/// each carrying mass total/m.
inline ParticleCloud init_particles(const InitialMeasure& z0, int m,
                                    RngStream& rng) {
  if (m <= 0) throw std::invalid_argument("init_particles: m <= 0");
  if (!(z0.total_mass() > 0.0))
    throw std::invalid_argument("init_particles: zero initial measure");
  ParticleCloud cloud;
  cloud.positions.reserve(m);
  for (int i = 0; i < m; ++i) cloud.positions.push_back(z0.sample(rng));
  cloud.masses.assign(m, z0.total_mass() / static_cast<double>(m));
  return cloud;
}

/// One replicate of the m-particle branching-coalescing system at time t:
/// positions run a coalescing Brownian motion from the sorted initial
/// points, masses take one exact branching transition each (independent of
/// the motion), and coincident particles pool into single atoms.
inline AtomicMeasure simulate_zm(const InitialMeasure& z0, int m, double gamma,
                                 double t, double step, RngStream& rng) {
  ParticleCloud cloud = init_particles(z0, m, rng);
  std::sort(cloud.positions.begin(), cloud.positions.end());
  const BmState end_state =
      coalescing_bm(make_bm_state(cloud.positions), t, step, rng);
  const FellerParams params{gamma};
  for (double& mass : cloud.masses)
    mass = feller_transition(mass, t, params, rng);
  return make_atomic_measure(end_state.positions, cloud.masses);
}

/// Time-t positions of the 2n dual particles started from the interval
/// endpoints (exact pair sampler when n = 1, stepped scheme otherwise).
inline std::vector<double> dual_endpoints(std::span<const double> endpoints,
                                          double t, double step,
                                          RngStream& rng) {
  if (endpoints.size() == 2) {
    const PairSample pair =
        coalescing_pair_exact(endpoints[0], endpoints[1], t, rng);
    return {pair.y1, pair.y2};
  }
  std::vector<double> pts(endpoints.begin(), endpoints.end());
  const BmState end_state = coalescing_bm(make_bm_state(pts), t, step, rng);
  return end_state.positions;
}

/// E[exp(-sum_j a_j Z_t(]y_{2j-1}, y_{2j}]))] estimated forward: simulate
/// the particle system and evaluate the test functional directly.
inline MCEstimate laplace_lhs_mc(const InitialMeasure& z0, int m, double gamma,
                                 double t, const IntervalUnion& u, double step,
                                 std::size_t replicates, std::uint64_t seed,
                                 std::uint64_t stream_base, int threads) {
  u.validate();
  return monte_carlo(seed, stream_base, replicates, threads,
                     [&](RngStream& rng, std::size_t) {
                       const AtomicMeasure z =
                           simulate_zm(z0, m, gamma, t, step, rng);
                       double s = 0.0;
                       for (std::size_t j = 0; j < u.interval_count(); ++j)
                         s += u.weights[j] *
                              z.interval_mass(u.endpoints[2 * j],
                                              u.endpoints[2 * j + 1]);
                       return std::exp(-s);
                     });
}

/// The dual side of the same functional: run the 2n-particle dual system
/// from the interval endpoints and integrate the piecewise-constant image
/// weight 2 a_j / (2 + gamma t a_j) against the initial measure over the
/// dual intervals ]Y_{2j-1}(t), Y_{2j}(t)].
inline MCEstimate laplace_rhs_mc(const InitialMeasure& z0, double gamma,
                                 double t, const IntervalUnion& u, double step,
                                 std::size_t replicates, std::uint64_t seed,
                                 std::uint64_t stream_base, int threads) {
  u.validate();
  std::vector<double> weight(u.interval_count());
  for (std::size_t j = 0; j < weight.size(); ++j)
    weight[j] =
        2.0 * u.weights[j] / (2.0 + gamma * t * u.weights[j]);
  return monte_carlo(
      seed, stream_base, replicates, threads,
      [&](RngStream& rng, std::size_t) {
        const std::vector<double> y = dual_endpoints(u.endpoints, t, step, rng);
        double s = 0.0;
        for (std::size_t j = 0; j < weight.size(); ++j)
          s += weight[j] * z0.interval_mass(y[2 * j], y[2 * j + 1]);
        return std::exp(-s);
      });
}

struct MomentCheckReport {
  MCEstimate first_lhs, first_rhs;
  MCEstimate second_lhs, second_rhs;
  double first_z = 0.0;
  double second_z = 0.0;
};

/// First and second moment identities of the test functional
/// f = sum_j a_j 1{]y_{2j-1}, y_{2j}]}: E[Z_t(f)] against E[Z_0(f dual)] and
/// E[Z_t(f)^2] against E[Z_0(f dual)^2 + gamma t Z_0(f dual)].
inline MomentCheckReport moment_check(const InitialMeasure& z0, int m,
                                      double gamma, double t,
                                      const IntervalUnion& u, double step,
                                      std::size_t replicates,
                                      std::uint64_t seed,
                                      std::uint64_t stream_base, int threads) {
  u.validate();
  std::vector<double> lhs1(replicates), lhs2(replicates);
  {
    const auto values = run_replicates(
        seed, stream_base, replicates, threads, [&](RngStream& rng,
                                                    std::size_t) {
          const AtomicMeasure z = simulate_zm(z0, m, gamma, t, step, rng);
          double s = 0.0;
          for (std::size_t j = 0; j < u.interval_count(); ++j)
            s += u.weights[j] * z.interval_mass(u.endpoints[2 * j],
                                                u.endpoints[2 * j + 1]);
          return s;
        });
    for (std::size_t i = 0; i < replicates; ++i) {
      lhs1[i] = values[i];
      lhs2[i] = values[i] * values[i];
    }
  }
  std::vector<double> rhs1(replicates), rhs2(replicates);
  {
    const auto values = run_replicates(
        seed, stream_base + (std::uint64_t{1} << 32), replicates, threads,
        [&](RngStream& rng, std::size_t) {
          const std::vector<double> y =
              dual_endpoints(u.endpoints, t, step, rng);
          double s = 0.0;
          for (std::size_t j = 0; j < u.interval_count(); ++j)
            s += u.weights[j] * z0.interval_mass(y[2 * j], y[2 * j + 1]);
          return s;
        });
    for (std::size_t i = 0; i < replicates; ++i) {
      rhs1[i] = values[i];
      rhs2[i] = values[i] * values[i] + gamma * t * values[i];
    }
  }
  MomentCheckReport rep;
  rep.first_lhs = summarize(lhs1, seed, stream_base);
  rep.first_rhs = summarize(rhs1, seed, stream_base);
  rep.second_lhs = summarize(lhs2, seed, stream_base);
  rep.second_rhs = summarize(rhs2, seed, stream_base);
  rep.first_z = two_sample_z(rep.first_lhs, rep.first_rhs);
  rep.second_z = two_sample_z(rep.second_lhs, rep.second_rhs);
  return rep;
}

/// Per-path observables of one chained-epoch simulation along a time grid.
struct PathObservation {
  double single_block_time = -1.0;  // first grid time with exactly one
                                    // positive-mass block; -1 if never seen
  double extinction_time = -1.0;    // first grid time with zero total mass
  double last_location = 0.0;       // heaviest block location at the last
                                    // grid time with positive mass
  bool extinct = false;
  std::vector<std::size_t> support_counts;  // positive-mass blocks per epoch
};

/// Chains exact mass transitions and stepped coalescing motion across the
/// grid epochs.  Masses stay attached to their original particles; a block
/// is alive while the masses it carries sum to a positive value.  Stops
/// early at extinction (mass zero is absorbing).
inline PathObservation simulate_path(const InitialMeasure& z0, int m,
                                     double gamma,
                                     std::span<const double> t_grid,
                                     double step, RngStream& rng,
                                     bool record_counts = true) {
  for (std::size_t k = 0; k + 1 < t_grid.size(); ++k)
    if (!(t_grid[k] < t_grid[k + 1]))
      throw std::invalid_argument("simulate_path: grid must increase");
  if (!t_grid.empty() && !(t_grid.front() > 0.0))
    throw std::invalid_argument("simulate_path: grid must start after 0");
  ParticleCloud cloud = init_particles(z0, m, rng);
  std::sort(cloud.positions.begin(), cloud.positions.end());
  BmState state = make_bm_state(cloud.positions);
  const FellerParams params{gamma};
  PathObservation obs;
  double prev = 0.0;
  for (double tk : t_grid) {
    const double dt = tk - prev;
    prev = tk;
    state = coalescing_bm(state, dt, std::min(step, dt), rng);
    for (double& mass : cloud.masses)
      if (mass > 0.0) mass = feller_transition(mass, dt, params, rng);
    // Block masses and the heaviest alive block.
    std::size_t alive = 0;
    double best_mass = 0.0, best_loc = 0.0;
    for (std::size_t b = 0; b < state.partition.block_count(); ++b) {
      double bm = 0.0;
      for (std::size_t i = state.partition.block_begin(b);
           i < state.partition.block_end(b); ++i)
        bm += cloud.masses[i];
      if (bm > 0.0) {
        ++alive;
        if (bm > best_mass) {
          best_mass = bm;
          best_loc = state.positions[state.partition.leader(b)];
        }
      }
    }
    if (record_counts) obs.support_counts.push_back(alive);
    if (alive >= 1) obs.last_location = best_loc;
    if (alive == 1 && obs.single_block_time < 0.0) obs.single_block_time = tk;
    if (alive == 0) {
      obs.extinction_time = tk;
      obs.extinct = true;
      break;
    }
  }
  return obs;
}

/// Mass transport over a frozen flow skeleton: every image point receives an
/// exact branching transition of the initial mass of its grid preimage cell.
/// The total over images is one branching transition of the covered mass.
inline AtomicMeasure flow_construct_zt(const InitialMeasure& z0, double gamma,
                                       double t, const FlowGrid& grid,
                                       RngStream& rng) {
  const FellerParams params{gamma};
  std::vector<double> locs, masses;
  double prev_boundary = grid.lo - grid.spacing;
  for (std::size_t i = 0; i < grid.images.size(); ++i) {
    const double cell_mass =
        z0.interval_mass_left_closed(prev_boundary, grid.boundaries[i]);
    prev_boundary = grid.boundaries[i];
    locs.push_back(grid.images[i]);
    masses.push_back(cell_mass > 0.0
                         ? feller_transition(cell_mass, t, params, rng)
                         : 0.0);
  }
  return make_atomic_measure(locs, masses);
}

/// Initial mass not covered by the grid preimage cells (callers warn on it).
inline double flow_uncovered_mass(const InitialMeasure& z0,
                                  const FlowGrid& grid) {
  if (grid.boundaries.empty()) return z0.total_mass();
  return z0.total_mass() - z0.interval_mass_left_closed(
                               grid.lo - grid.spacing, grid.boundaries.back());
}

/// Riemann time-average of 1{Z_s(]a,b]) = 0} over a uniform s-grid, chained
/// epoch to epoch; the grid resolution bias is the caller's allowance.
inline MCEstimate occupation_zero_mc(const InitialMeasure& z0, int m,
                                     double gamma, double a, double b,
                                     double t, int grid_points, double step,
                                     std::size_t replicates,
                                     std::uint64_t seed,
                                     std::uint64_t stream_base, int threads) {
  if (grid_points < 1)
    throw std::invalid_argument("occupation_zero_mc: need grid points");
  std::vector<double> grid(grid_points);
  for (int k = 0; k < grid_points; ++k)
    grid[k] = t * static_cast<double>(k + 1) / grid_points;
  const double dt_weight = t / grid_points;
  return monte_carlo(
      seed, stream_base, replicates, threads, [&](RngStream& rng,
                                                  std::size_t) {
        ParticleCloud cloud = init_particles(z0, m, rng);
        std::sort(cloud.positions.begin(), cloud.positions.end());
        BmState state = make_bm_state(cloud.positions);
        const FellerParams params{gamma};
        double occupied_zero = 0.0;
        double prev = 0.0;
        bool alive = true;
        for (double tk : grid) {
          if (alive) {
            const double dt = tk - prev;
            state = coalescing_bm(state, dt, std::min(step, dt), rng);
            double total = 0.0;
            for (double& mass : cloud.masses)
              if (mass > 0.0) {
                mass = feller_transition(mass, dt, params, rng);
                total += mass;
              }
            alive = total > 0.0;
          }
          prev = tk;
          if (!alive) {
            occupied_zero += dt_weight;
            continue;
          }
          double in_interval = 0.0;
          for (std::size_t b2 = 0; b2 < state.partition.block_count(); ++b2) {
            const double loc = state.positions[state.partition.leader(b2)];
            if (loc > a && loc <= b) {
              for (std::size_t i = state.partition.block_begin(b2);
                   i < state.partition.block_end(b2); ++i)
                in_interval += cloud.masses[i];
            }
          }
          if (in_interval == 0.0) occupied_zero += dt_weight;
        }
        return occupied_zero;
      });
}

struct AvoidanceReport {
  MCEstimate direct;  // P{support misses the union}, forward simulation
  MCEstimate dual;    // E[exp(-(2/(gamma t)) Z_0(dual union))]
  double z = 0.0;
};

/// Avoidance probability of the time-t support against its dual expression.
inline AvoidanceReport cox_avoidance_check(const InitialMeasure& z0, int m,
                                           double gamma, double t,
                                           const IntervalUnion& u, double step,
                                           std::size_t replicates,
                                           std::uint64_t seed,
                                           std::uint64_t stream_base,
                                           int threads) {
  u.validate();
  AvoidanceReport rep;
  rep.direct = monte_carlo(
      seed, stream_base, replicates, threads, [&](RngStream& rng, std::size_t) {
        const AtomicMeasure z = simulate_zm(z0, m, gamma, t, step, rng);
        for (std::size_t j = 0; j < u.interval_count(); ++j)
          if (z.support_count_in(u.endpoints[2 * j], u.endpoints[2 * j + 1]) >
              0)
            return 0.0;
        return 1.0;
      });
  const double c = 2.0 / (gamma * t);
  rep.dual = monte_carlo(
      seed, stream_base + (std::uint64_t{1} << 32), replicates, threads,
      [&](RngStream& rng, std::size_t) {
        const std::vector<double> y = dual_endpoints(u.endpoints, t, step, rng);
        double s = 0.0;
        for (std::size_t j = 0; j < u.interval_count(); ++j)
          s += z0.interval_mass(y[2 * j], y[2 * j + 1]);
        return std::exp(-c * s);
      });
  rep.z = two_sample_z(rep.direct, rep.dual);
  return rep;
}

}  // namespace coalsim
