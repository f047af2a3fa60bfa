// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Independent reference computations used only by tests.  Everything here is
// a direct series or brute-force evaluation, deliberately separate from the
// library code paths it checks.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace coalsim::oracle {

/// Modified Bessel function I_k(x) by its power series.
inline double bessel_i(int k, double x) {
  if (k < 0) k = -k;
  const double half = 0.5 * x;
  double term = 1.0;
  for (int j = 1; j <= k; ++j) term *= half / j;
  double sum = term;
  const double q = half * half;
  for (int j = 1; j < 400; ++j) {
    term *= q / (static_cast<double>(j) * (j + k));
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return sum;
}

/// P{X_t = k} for a rate-1 symmetric continuous-time simple walk started at
/// 0: exp(-t) I_k(t).
inline double symmetric_walk_pmf(int k, double t) {
  return std::exp(-t) * bessel_i(k, t);
}

/// Poisson pmf, direct.
inline double poisson_pmf(long long k, double rate) {
  return std::exp(-rate + k * std::log(rate) - std::lgamma(k + 1.0));
}

}  // namespace coalsim::oracle
