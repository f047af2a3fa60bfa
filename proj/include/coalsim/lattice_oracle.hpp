// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "coalsim/lattice.hpp"

namespace coalsim {

struct ArrayLawOracle {
  /// probabilities[mask] = P{indicator array == mask} at time t, row-major
  /// packing as IndicatorArray::bitmask().
  std::vector<double> probabilities;
  double error_bound = 0.0;
  bool converged = false;
};

/// Exact law of the balls-in-boxes indicator array of a coalescing walk at
/// time t, by uniformization: condition on the number of jump events of a
/// dominating Poisson clock at rate m, evolve the embedded jump chain on a
/// clipped position window, and sum Poisson-weighted step distributions.
/// The reported error bound is the Poisson tail beyond jump_cap plus any
/// probability clipped at the window boundary (zero when
/// truncation_radius >= jump_cap).
inline ArrayLawOracle array_law_oracle(const LatticeState& initial, double p,
                                       double t, std::span<const double> boxes,
                                       int truncation_radius, int jump_cap,
                                       double tolerance = 1e-6) {
  validate_lattice_state(initial);
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("array_law_oracle: p outside [0,1]");
  if (!(t >= 0.0)) throw std::invalid_argument("array_law_oracle: t < 0");
  const std::size_t m = initial.positions.size();
  const std::size_t n_bits = m * (boxes.size() - 1);
  if (n_bits > 12)
    throw std::invalid_argument("array_law_oracle: > 12 indicator bits");

  // Chain state: interleaved (block position, block size) on the integer
  // lattice after removing the offset.
  using State = std::vector<int>;
  const std::vector<double> q0 = free_positions(initial);
  State start;
  int lo_window = 0, hi_window = 0;
  for (std::size_t b = 0; b < q0.size(); ++b) {
    const int pos = static_cast<int>(std::rint(q0[b] - initial.lattice_offset));
    start.push_back(pos);
    start.push_back(static_cast<int>(initial.partition.block_size(b)));
    if (b == 0) {
      lo_window = hi_window = pos;
    } else {
      lo_window = std::min(lo_window, pos);
      hi_window = std::max(hi_window, pos);
    }
  }
  lo_window -= truncation_radius;
  hi_window += truncation_radius;

  const double rate_bound = static_cast<double>(m);
  std::map<State, double> dist{{start, 1.0}};
  double lost = 0.0;

  const auto pattern_of = [&](const State& s) {
    std::vector<double> pos;
    for (std::size_t k = 0; k < s.size(); k += 2)
      for (int c = 0; c < s[k + 1]; ++c)
        pos.push_back(s[k] + initial.lattice_offset);
    return balls_in_boxes(pos, boxes).bitmask();
  };

  ArrayLawOracle out;
  out.probabilities.assign(std::size_t{1} << n_bits, 0.0);
  const double lambda_t = rate_bound * t;
  double weight = std::exp(-lambda_t);  // Poisson(lambda_t) pmf at k
  double weight_sum = weight;
  for (int k = 0;; ++k) {
    for (const auto& [state, prob] : dist)
      out.probabilities[pattern_of(state)] += weight * prob;
    if (k == jump_cap) break;
    // One step of the uniformized jump chain.
    std::map<State, double> next;
    for (const auto& [state, prob] : dist) {
      const std::size_t blocks = state.size() / 2;
      const double move_each = 1.0 / rate_bound;
      const double stay =
          1.0 - static_cast<double>(blocks) * move_each;
      if (stay > 0.0) next[state] += stay * prob;
      for (std::size_t b = 0; b < blocks; ++b) {
        for (const int step : {+1, -1}) {
          const double w = (step > 0 ? p : 1.0 - p) * move_each * prob;
          if (w == 0.0) continue;
          State moved = state;
          moved[2 * b] += step;
          if (moved[2 * b] < lo_window || moved[2 * b] > hi_window) {
            lost += w;
            continue;
          }
          // Merge with the neighbour the step may have landed on.
          if (step > 0 && 2 * (b + 1) < moved.size() &&
              moved[2 * b] == moved[2 * b + 2]) {
            moved[2 * b + 3] += moved[2 * b + 1];
            moved[2 * b] = moved[2 * b + 2];
            moved[2 * b + 1] = moved[2 * b + 3];
            moved.erase(moved.begin() + 2 * (b + 1), moved.begin() + 2 * (b + 2));
          } else if (step < 0 && b > 0 && moved[2 * b] == moved[2 * b - 2]) {
            moved[2 * b - 1] += moved[2 * b + 1];
            moved.erase(moved.begin() + 2 * b, moved.begin() + 2 * (b + 1));
          }
          next[moved] += w;
        }
      }
    }
    dist = std::move(next);
    weight *= lambda_t / (k + 1);
    weight_sum += weight;
  }
  const double poisson_tail = std::max(0.0, 1.0 - weight_sum);
  out.error_bound = poisson_tail + lost;
  out.converged = out.error_bound <= tolerance;
  return out;
}

}  // namespace coalsim
