// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "coalsim/rng.hpp"

namespace coalsim {

/// Finite initial measure with an evaluable CDF and quantile function.
/// Two shapes: a finite list of atoms, or a piecewise-uniform density over
/// consecutive break intervals.  All interval masses use the half-open
/// ]a, b] convention, and the CDF is right-continuous.
class InitialMeasure {
 public:
  static InitialMeasure atoms(std::vector<std::pair<double, double>> list) {
    InitialMeasure m;
    m.kind_ = Kind::kAtoms;
    std::sort(list.begin(), list.end());
    for (const auto& [loc, mass] : list) {
      if (!(mass >= 0.0) || !std::isfinite(loc))
        throw std::invalid_argument("InitialMeasure: bad atom");
      if (mass == 0.0) continue;
      if (!m.locations_.empty() && m.locations_.back() == loc) {
        m.weights_.back() += mass;
      } else {
        m.locations_.push_back(loc);
        m.weights_.push_back(mass);
      }
    }
    m.finish();
    return m;
  }

  /// breaks.size() == weights.size() + 1; weight j spread uniformly over
  /// [breaks[j], breaks[j+1]].
  static InitialMeasure piecewise_uniform(std::vector<double> breaks,
                                          std::vector<double> weights) {
    if (breaks.size() != weights.size() + 1 || weights.empty())
      throw std::invalid_argument("InitialMeasure: breaks/weights mismatch");
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
      if (!(breaks[i] < breaks[i + 1]))
        throw std::invalid_argument("InitialMeasure: breaks must increase");
    for (double w : weights)
      if (!(w >= 0.0))
        throw std::invalid_argument("InitialMeasure: negative weight");
    InitialMeasure m;
    m.kind_ = Kind::kPiecewise;
    m.locations_ = std::move(breaks);
    m.weights_ = std::move(weights);
    m.finish();
    return m;
  }

  static InitialMeasure zero() {
    InitialMeasure m;
    m.kind_ = Kind::kAtoms;
    m.finish();
    return m;
  }

  double total_mass() const { return total_; }

  /// Measure of (-inf, x].
  double cdf(double x) const {
    if (kind_ == Kind::kAtoms) {
      double acc = 0.0;
      for (std::size_t i = 0; i < locations_.size() && locations_[i] <= x; ++i)
        acc += weights_[i];
      return acc;
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < weights_.size(); ++j) {
      const double lo = locations_[j], hi = locations_[j + 1];
      if (x >= hi) {
        acc += weights_[j];
      } else if (x > lo) {
        acc += weights_[j] * (x - lo) / (hi - lo);
        break;
      } else {
        break;
      }
    }
    return acc;
  }

  /// Measure of ]a, b]; zero when b <= a.
  double interval_mass(double a, double b) const {
    if (!(b > a)) return 0.0;
    return cdf(b) - cdf(a);
  }

  /// Measure of [a, b[; zero when b <= a.  Used for flow preimage cells.
  double interval_mass_left_closed(double a, double b) const {
    if (!(b > a)) return 0.0;
    if (kind_ == Kind::kAtoms) {
      double acc = 0.0;
      for (std::size_t i = 0; i < locations_.size(); ++i)
        if (locations_[i] >= a && locations_[i] < b) acc += weights_[i];
      return acc;
    }
    return cdf(b) - cdf(a);
  }

  /// Smallest x with cdf(x) >= u * total_mass, u in [0, 1].
  double quantile(double u) const {
    if (total_ <= 0.0)
      throw std::domain_error("InitialMeasure::quantile: zero measure");
    const double target = std::clamp(u, 0.0, 1.0) * total_;
    double acc = 0.0;
    if (kind_ == Kind::kAtoms) {
      for (std::size_t i = 0; i < locations_.size(); ++i) {
        acc += weights_[i];
        if (acc >= target) return locations_[i];
      }
      return locations_.back();
    }
    for (std::size_t j = 0; j < weights_.size(); ++j) {
      if (acc + weights_[j] >= target && weights_[j] > 0.0) {
        const double frac = (target - acc) / weights_[j];
        return locations_[j] + frac * (locations_[j + 1] - locations_[j]);
      }
      acc += weights_[j];
    }
    return locations_.back();
  }

  /// One draw from the normalized measure.
  double sample(RngStream& rng) const { return quantile(rng.uniform01()); }

  /// Mean of the (unnormalized) measure: integral of x d(measure).
  double first_moment() const {
    double acc = 0.0;
    if (kind_ == Kind::kAtoms) {
      for (std::size_t i = 0; i < locations_.size(); ++i)
        acc += locations_[i] * weights_[i];
    } else {
      for (std::size_t j = 0; j < weights_.size(); ++j)
        acc += 0.5 * (locations_[j] + locations_[j + 1]) * weights_[j];
    }
    return acc;
  }

  /// Points where the CDF is non-smooth: atom locations or piece breaks.
  const std::vector<double>& discontinuities() const { return locations_; }

  bool is_atomic() const { return kind_ == Kind::kAtoms; }
  double support_min() const {
    return locations_.empty() ? 0.0 : locations_.front();
  }
  double support_max() const {
    return locations_.empty() ? 0.0 : locations_.back();
  }

  const std::vector<double>& node_locations() const { return locations_; }
  const std::vector<double>& node_weights() const { return weights_; }

 private:
  enum class Kind { kAtoms, kPiecewise };

  void finish() {
    total_ = 0.0;
    for (double w : weights_) total_ += w;
  }

  Kind kind_ = Kind::kAtoms;
  std::vector<double> locations_;  // atom locations, or piece breaks
  std::vector<double> weights_;    // atom masses, or piece weights
  double total_ = 0.0;
};

/// Finite list of weighted atoms: an empirical measure at one time point.
struct AtomicMeasure {
  struct Atom {
    double location = 0.0;
    double mass = 0.0;
  };
  std::vector<Atom> atoms;  // sorted by location, zero masses pruned

  double total_mass() const {
    double acc = 0.0;
    for (const Atom& a : atoms) acc += a.mass;
    return acc;
  }

  double interval_mass(double a, double b) const {
    double acc = 0.0;
    for (const Atom& at : atoms)
      if (at.location > a && at.location <= b) acc += at.mass;
    return acc;
  }

  std::size_t support_count_in(double a, double b) const {
    std::size_t n = 0;
    for (const Atom& at : atoms)
      if (at.location > a && at.location <= b) ++n;
    return n;
  }
};

/// Merges coincident locations and drops zero-mass atoms.
inline AtomicMeasure make_atomic_measure(std::span<const double> locations,
                                         std::span<const double> masses) {
  if (locations.size() != masses.size())
    throw std::invalid_argument("make_atomic_measure: size mismatch");
  std::vector<std::size_t> order(locations.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return locations[a] < locations[b];
  });
  AtomicMeasure m;
  for (std::size_t k : order) {
    if (!(masses[k] > 0.0)) continue;
    if (!m.atoms.empty() && m.atoms.back().location == locations[k])
      m.atoms.back().mass += masses[k];
    else
      m.atoms.push_back({locations[k], masses[k]});
  }
  return m;
}

/// Disjoint half-open test intervals ]endpoints[2j], endpoints[2j+1]] with a
/// weight (or a weight pair) per interval.
struct IntervalUnion {
  std::vector<double> endpoints;  // 2n nondecreasing values
  std::vector<double> weights;    // n values (a_j); alpha in the mass-dim model
  std::vector<double> weights_b;  // optional n values (beta_j), may be empty

  std::size_t interval_count() const { return weights.size(); }

  void validate() const {
    // an empty union is legal (trivial functionals evaluate to 1)
    if (endpoints.size() != 2 * weights.size())
      throw std::invalid_argument("IntervalUnion: endpoint/weight mismatch");
    if (!weights_b.empty() && weights_b.size() != weights.size())
      throw std::invalid_argument("IntervalUnion: weight pair mismatch");
    for (std::size_t i = 0; i + 1 < endpoints.size(); ++i)
      if (!(endpoints[i] <= endpoints[i + 1]))
        throw std::invalid_argument("IntervalUnion: endpoints must be sorted");
    for (double w : weights)
      if (!(w >= 0.0)) throw std::invalid_argument("IntervalUnion: w < 0");
    for (double w : weights_b)
      if (!(w >= 0.0)) throw std::invalid_argument("IntervalUnion: w < 0");
  }
};

/// Initial dimension measure of the mass-dimension model: a finite measure
/// on [0, inf) with total mass delta-bar and finite mean mu.
struct DimensionSpec {
  InitialMeasure measure;

  double total() const { return measure.total_mass(); }  // delta-bar
  double mean() const { return measure.first_moment(); }  // mu

  void validate() const {
    if (measure.total_mass() > 0.0 && measure.support_min() < 0.0)
      throw std::invalid_argument("DimensionSpec: support must be >= 0");
  }
};

}  // namespace coalsim
