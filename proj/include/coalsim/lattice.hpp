// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "coalsim/distributions.hpp"
#include "coalsim/interval_partition.hpp"
#include "coalsim/rng.hpp"

namespace coalsim {

/// Ordered continuous-time coalescing random walkers on Z (offset 0) or on
/// the staggered lattice Z + 1/2 (offset 0.5).  Positions are nondecreasing
/// and two particles share a position exactly when they share a partition
/// block.
struct LatticeState {
  std::vector<double> positions;
  IntervalPartition partition;
  double time = 0.0;
  double lattice_offset = 0.0;  // 0 or 0.5
};

inline void validate_lattice_state(const LatticeState& s) {
  const std::size_t m = s.positions.size();
  if (s.partition.element_count() != m)
    throw std::invalid_argument("lattice state: partition size mismatch");
  for (std::size_t i = 0; i < m; ++i) {
    const double q = s.positions[i] - s.lattice_offset;
    if (std::rint(q) != q)
      throw std::invalid_argument("lattice state: position off the lattice");
  }
  for (std::size_t i = 0; i + 1 < m; ++i) {
    if (s.positions[i] > s.positions[i + 1])
      throw std::invalid_argument("lattice state: positions must be sorted");
    const bool equal = s.positions[i] == s.positions[i + 1];
    const bool same = s.partition.same_block(i, i + 1);
    if (equal != same)
      throw std::invalid_argument(
          "lattice state: equal positions iff same block violated");
  }
}

/// Free-particle (block leader) positions; the bijection sending a coalesced
/// configuration to its distinct positions.
inline std::vector<double> free_positions(const LatticeState& s) {
  return leader_values(s.positions, s.partition);
}

/// Inverse of free_positions: rebuilds the per-particle position vector.
inline std::vector<double> expand_positions(std::span<const double> free_pos,
                                            const IntervalPartition& partition) {
  return expand_block_values(free_pos, partition);
}

inline LatticeState make_lattice_state(std::vector<double> free_pos,
                                       IntervalPartition partition,
                                       double lattice_offset = 0.0,
                                       double time = 0.0) {
  LatticeState s;
  s.positions = expand_positions(free_pos, partition);
  s.partition = std::move(partition);
  s.time = time;
  s.lattice_offset = lattice_offset;
  validate_lattice_state(s);
  return s;
}

/// Event-driven exact simulation of the coalescing walk for a duration t:
/// free blocks jump at rate 1 (total rate = block count), step +1 with
/// probability p and -1 otherwise; a block landing on its neighbour merges
/// with it.  A single +-1 jump on distinct positions can close at most one
/// gap, so merges are pairwise.
inline LatticeState simulate_coalescing_walk(const LatticeState& initial,
                                             double p, double t,
                                             RngStream& rng) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("simulate_coalescing_walk: p outside [0,1]");
  if (!(t >= 0.0))
    throw std::invalid_argument("simulate_coalescing_walk: t < 0");
  validate_lattice_state(initial);
  std::vector<double> q = free_positions(initial);
  IntervalPartition partition = initial.partition;
  double clock = 0.0;
  for (;;) {
    const double rate = static_cast<double>(partition.block_count());
    if (rate == 0.0) break;
    clock += draw_exponential(rng, 1.0 / rate);
    if (clock >= t) break;
    const std::size_t b = std::min<std::size_t>(
        partition.block_count() - 1,
        static_cast<std::size_t>(rng.uniform01() * rate));
    const double step = rng.uniform01() < p ? 1.0 : -1.0;
    q[b] += step;
    if (step > 0.0 && b + 1 < q.size() && q[b] == q[b + 1]) {
      q.erase(q.begin() + static_cast<std::ptrdiff_t>(b + 1));
      partition.merge_with_next(b);
    } else if (step < 0.0 && b > 0 && q[b] == q[b - 1]) {
      q.erase(q.begin() + static_cast<std::ptrdiff_t>(b));
      partition.merge_with_next(b - 1);
    }
  }
  LatticeState out;
  out.positions = expand_positions(q, partition);
  out.partition = std::move(partition);
  out.time = initial.time + t;
  out.lattice_offset = initial.lattice_offset;
  return out;
}

/// m x (n-1) array of balls-in-boxes indicators.
struct IndicatorArray {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> bits;  // row-major

  std::uint8_t at(std::size_t i, std::size_t j) const {
    return bits[i * cols + j];
  }
  /// Row-major packing, bit (i, j) -> position i*cols + j.
  std::uint64_t bitmask() const {
    std::uint64_t mask = 0;
    for (std::size_t k = 0; k < bits.size(); ++k)
      if (bits[k]) mask |= std::uint64_t{1} << k;
    return mask;
  }
};

/// bits(i, j) = 1{ points[i] in ]boxes[j], boxes[j+1]] }.  Boxes are
/// disjoint by ordering, so each row has at most one 1.
inline IndicatorArray balls_in_boxes(std::span<const double> points,
                                     std::span<const double> boxes) {
  for (std::size_t j = 0; j + 1 < boxes.size(); ++j)
    if (boxes[j] > boxes[j + 1])
      throw std::invalid_argument("balls_in_boxes: boxes not sorted");
  IndicatorArray a;
  a.rows = points.size();
  a.cols = boxes.empty() ? 0 : boxes.size() - 1;
  a.bits.assign(a.rows * a.cols, 0);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j)
      if (points[i] > boxes[j] && points[i] <= boxes[j + 1])
        a.bits[i * a.cols + j] = 1;
  return a;
}

/// Which walkers sit in which fixed boxes.
inline IndicatorArray indicator_forward(const LatticeState& state,
                                        std::span<const double> boxes) {
  return balls_in_boxes(state.positions, boxes);
}

/// Which fixed points sit in which walker-delimited boxes.
inline IndicatorArray indicator_backward(std::span<const double> points,
                                         const LatticeState& state) {
  return balls_in_boxes(points, state.positions);
}

/// Applies the coalescing-walk generator to a callback on position vectors:
///   p * sum_b f(block b shifted +1) + (1-p) * sum_b f(block b shifted -1)
///   - block_count * f(positions).
template <class F>
double apply_walk_generator(const F& f, const LatticeState& state, double p) {
  validate_lattice_state(state);
  std::vector<double> work = state.positions;
  const std::size_t blocks = state.partition.block_count();
  double up = 0.0, down = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t lo = state.partition.block_begin(b);
    const std::size_t hi = state.partition.block_end(b);
    for (std::size_t i = lo; i < hi; ++i) work[i] += 1.0;
    up += f(std::span<const double>(work));
    for (std::size_t i = lo; i < hi; ++i) work[i] -= 2.0;
    down += f(std::span<const double>(work));
    for (std::size_t i = lo; i < hi; ++i) work[i] += 1.0;
  }
  return p * up + (1.0 - p) * down -
         static_cast<double>(blocks) * f(std::span<const double>(work));
}

/// Function of the joint indicator array, seen through its packed bits.
using ArrayFunction = std::function<double(std::uint64_t)>;

/// |G(g-bar_y)(x) - H(g-bar_x)(y)| where G drives the p-walk on Z, H the
/// (1-p)-walk on Z + 1/2, and g-bar composes g with the balls-in-boxes
/// indicators of (x-positions, y-boxes).  Zero, to rounding, for every
/// admissible pair of states: the generator form of the array duality.
inline double generator_duality_gap(const LatticeState& x_state,
                                    const LatticeState& y_state, double p,
                                    const ArrayFunction& g) {
  validate_lattice_state(x_state);
  validate_lattice_state(y_state);
  if (std::fabs(std::fabs(x_state.lattice_offset - y_state.lattice_offset) -
                0.5) > 1e-12)
    throw std::invalid_argument(
        "generator_duality_gap: states must live on staggered lattices");
  const auto g_bar = [&](std::span<const double> xs,
                         std::span<const double> ys) {
    return g(balls_in_boxes(xs, ys).bitmask());
  };
  const double lhs = apply_walk_generator(
      [&](std::span<const double> xs) {
        return g_bar(xs, std::span<const double>(y_state.positions));
      },
      x_state, p);
  const double rhs = apply_walk_generator(
      [&](std::span<const double> ys) {
        return g_bar(std::span<const double>(x_state.positions), ys);
      },
      y_state, 1.0 - p);
  return std::fabs(lhs - rhs);
}

}  // namespace coalsim
