// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "coalsim/distributions.hpp"
#include "coalsim/interval_partition.hpp"
#include "coalsim/rng.hpp"
#include "coalsim/special_functions.hpp"

namespace coalsim {

/// Ordered coalescing Brownian particles; same invariants as LatticeState
/// (positions nondecreasing, equal iff same block), positions real-valued.
struct BmState {
  std::vector<double> positions;
  IntervalPartition partition;
  double time = 0.0;
};

inline void validate_bm_state(const BmState& s) {
  const std::size_t m = s.positions.size();
  if (s.partition.element_count() != m)
    throw std::invalid_argument("bm state: partition size mismatch");
  for (std::size_t i = 0; i + 1 < m; ++i) {
    if (s.positions[i] > s.positions[i + 1])
      throw std::invalid_argument("bm state: positions must be sorted");
    const bool equal = s.positions[i] == s.positions[i + 1];
    if (equal != s.partition.same_block(i, i + 1))
      throw std::invalid_argument(
          "bm state: equal positions iff same block violated");
  }
}

/// Builds a state from sorted initial points, grouping coincident points
/// into one block (coincident Brownian particles coalesce at time 0+).
inline BmState make_bm_state(std::vector<double> sorted_positions,
                             double time = 0.0) {
  for (std::size_t i = 0; i + 1 < sorted_positions.size(); ++i)
    if (sorted_positions[i] > sorted_positions[i + 1])
      throw std::invalid_argument("make_bm_state: positions must be sorted");
  std::vector<std::size_t> ends;
  for (std::size_t i = 0; i < sorted_positions.size(); ++i)
    if (i + 1 == sorted_positions.size() ||
        sorted_positions[i + 1] != sorted_positions[i])
      ends.push_back(i + 1);
  BmState s;
  s.positions = std::move(sorted_positions);
  s.partition = IntervalPartition::from_block_ends(std::move(ends));
  s.time = time;
  return s;
}

struct PairSample {
  double y1 = 0.0;
  double y2 = 0.0;
  bool coalesced = false;
};

/// Exact draw of a two-particle coalescing Brownian motion at time t from
/// (a, b), a <= b.
///
/// In coordinates rotated by pi/4 the pair becomes (u, v) = ((y1 + y2) /
/// sqrt2, (y2 - y1) / sqrt2): v is a standard Brownian motion from
/// b~ = (b - a)/sqrt2 absorbed at 0, independent of the standard Brownian
/// motion u from a~ = (a + b)/sqrt2 while v survives.  Survival has
/// probability 1 - 2 Phi-bar(b~ / sqrt t); then v carries the
/// reflection-principle density p_t(b~, y) - p_t(b~, -y) on y > 0 and
/// (y1, y2) is the rotation of (u, v).  On absorption the hitting time is
/// T = b~^2 / Z^2 with Z standard normal restricted so that T <= t, the
/// paths meet at u(T)/sqrt2 ~ N((a+b)/2, T/2), and the merged particle then
/// runs freely over (T, t], so the common location is N((a+b)/2, t - T/2).
/// Coalesced pairs satisfy y1 == y2 exactly.
inline PairSample coalescing_pair_exact(double a, double b, double t,
                                        RngStream& rng) {
  if (!(b >= a)) throw std::invalid_argument("coalescing_pair_exact: b < a");
  if (!(t > 0.0)) throw std::invalid_argument("coalescing_pair_exact: t <= 0");
  const double sqrt2 = 1.4142135623730950488;
  const double a_rot = (a + b) / sqrt2;
  const double b_rot = (b - a) / sqrt2;
  const double sqrt_t = std::sqrt(t);
  PairSample out;
  const double tail = normal_sf(b_rot / sqrt_t);
  if (rng.uniform01() < 2.0 * tail) {
    out.coalesced = true;
    double hit_time = 0.0;
    if (b_rot > 0.0) {
      // |Z| conditioned on |Z| >= b_rot / sqrt(t); then T = b_rot^2 / Z^2.
      const double z = -normal_quantile(tail * rng.uniform01_open_left());
      hit_time = (b_rot * b_rot) / (z * z);
    }
    const double loc =
        draw_normal(rng, 0.5 * (a + b), std::sqrt(t - 0.5 * hit_time));
    out.y1 = out.y2 = loc;
    return out;
  }
  // Survived: draw v from the absorbed density by rejection against
  // N(b_rot, t); the acceptance odds equal the survival probability, so the
  // expected number of proposals over both branches stays O(1).
  double v;
  for (;;) {
    v = draw_normal(rng, b_rot, sqrt_t);
    if (v <= 0.0) continue;
    if (rng.uniform01() < -std::expm1(-2.0 * v * b_rot / t)) break;
  }
  const double u = draw_normal(rng, a_rot, sqrt_t);
  out.y1 = (u - v) / sqrt2;
  out.y2 = (u + v) / sqrt2;
  return out;
}

/// Euler scheme with exact Gaussian block increments and Brownian-bridge
/// coalescence detection.  Adjacent free blocks with entry gap d0 > 0 and
/// exit gap d1 > 0 merge within the step with probability
/// exp(-d0 d1 / step): the gap diffuses at variance rate 2 (difference of
/// independent Brownian motions), so the bridge-minimum crossing probability
/// exp(-2 d0 d1 / (2 step)) carries no extra factor of 2.  A non-positive
/// exit gap merges deterministically.  Merges cascade left to right within a
/// step and the merged block keeps the lower-index block's path.
inline BmState coalescing_bm(const BmState& initial, double t, double step,
                             RngStream& rng) {
  if (!(step > 0.0)) throw std::invalid_argument("coalescing_bm: step <= 0");
  if (!(t >= 0.0)) throw std::invalid_argument("coalescing_bm: t < 0");
  validate_bm_state(initial);
  std::vector<double> starts = leader_values(initial.positions,
                                             initial.partition);
  std::vector<std::size_t> sizes(initial.partition.block_count());
  for (std::size_t b = 0; b < sizes.size(); ++b)
    sizes[b] = initial.partition.block_size(b);

  double remaining = t;
  std::vector<double> ends;
  std::vector<double> next_starts;
  std::vector<std::size_t> next_sizes;
  while (remaining > 0.0 && !starts.empty()) {
    // A lone block has no neighbour to meet; one exact increment covers the
    // rest of the horizon.
    const double dt =
        starts.size() == 1 ? remaining : std::min(step, remaining);
    remaining -= dt;
    const double sd = std::sqrt(dt);
    const std::size_t h = starts.size();
    ends.resize(h);
    for (std::size_t b = 0; b < h; ++b)
      ends[b] = starts[b] + draw_normal(rng, 0.0, sd);
    next_starts.clear();
    next_sizes.clear();
    double cur_start = starts[0];
    double cur_end = ends[0];
    std::size_t cur_size = sizes[0];
    for (std::size_t b = 1; b < h; ++b) {
      const double d0 = starts[b] - cur_start;
      const double d1 = ends[b] - cur_end;
      bool merge = d1 <= 0.0;
      if (!merge) merge = rng.uniform01() < std::exp(-d0 * d1 / dt);
      if (merge) {
        cur_size += sizes[b];
      } else {
        next_starts.push_back(cur_end);
        next_sizes.push_back(cur_size);
        cur_start = starts[b];
        cur_end = ends[b];
        cur_size = sizes[b];
      }
    }
    next_starts.push_back(cur_end);
    next_sizes.push_back(cur_size);
    starts = next_starts;
    sizes = next_sizes;
  }
  std::vector<std::size_t> block_ends;
  block_ends.reserve(sizes.size());
  std::size_t acc = 0;
  for (std::size_t s : sizes) {
    acc += s;
    block_ends.push_back(acc);
  }
  BmState out;
  out.partition = IntervalPartition::from_block_ends(std::move(block_ends));
  out.positions = expand_block_values(starts, out.partition);
  out.time = initial.time + t;
  return out;
}

/// Restriction of the time-t coalescing flow to a dyadic grid of spacing
/// 2^-level on [lo, hi].  `images` are the distinct terminal positions,
/// `boundaries[i]` the largest grid point mapping to images[i]; the grid
/// preimage of images[i] is [boundaries[i-1], boundaries[i][ intersected
/// with the grid, with the convention boundaries[-1] = lo - spacing.
struct FlowGrid {
  int level = 0;
  double lo = 0.0;
  double hi = 0.0;
  double spacing = 0.0;
  double time = 0.0;
  std::vector<double> images;
  std::vector<double> boundaries;
};

inline FlowGrid flow_grid(int level, double lo, double hi, double t,
                          double step, RngStream& rng) {
  if (!(lo < hi)) throw std::invalid_argument("flow_grid: need lo < hi");
  if (level < 0) throw std::invalid_argument("flow_grid: level < 0");
  FlowGrid grid;
  grid.level = level;
  grid.lo = lo;
  grid.hi = hi;
  grid.spacing = std::ldexp(1.0, -level);
  grid.time = t;
  std::vector<double> points;
  for (double x = lo; x <= hi + 0.5 * grid.spacing; x += grid.spacing)
    points.push_back(x);
  const BmState terminal = coalescing_bm(make_bm_state(points), t, step, rng);
  const std::size_t blocks = terminal.partition.block_count();
  grid.images.resize(blocks);
  grid.boundaries.resize(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    grid.images[b] = terminal.positions[terminal.partition.leader(b)];
    const std::size_t last = terminal.partition.block_end(b) - 1;
    grid.boundaries[b] = points[last];
  }
  return grid;
}

}  // namespace coalsim
