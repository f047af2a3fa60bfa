// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

namespace coalsim {

struct QuadratureSpec {
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  double trunc_sigmas = 8.0;  // Gaussian domain truncation, in sd units
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = false;
  std::size_t evaluations = 0;
};

namespace detail {

// Gauss-Kronrod 7-15 nodes/weights on [-1, 1].
inline constexpr double kKronrodNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
inline constexpr double kGaussWeights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

template <class F>
inline void gk15(const F& f, double a, double b, double& value,
                 double& error) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double fv[15];
  for (int i = 0; i < 7; ++i) {
    fv[i] = f(c - h * kKronrodNodes[i]);
    fv[14 - i] = f(c + h * kKronrodNodes[i]);
  }
  fv[7] = f(c);
  double kronrod = kKronrodWeights[7] * fv[7];
  for (int i = 0; i < 7; ++i)
    kronrod += kKronrodWeights[i] * (fv[i] + fv[14 - i]);
  double gauss = kGaussWeights[3] * fv[7];
  for (int i = 0; i < 3; ++i) {
    const int j = 2 * i + 1;
    gauss += kGaussWeights[i] * (fv[j] + fv[14 - j]);
  }
  value = kronrod * h;
  const double diff = std::fabs(kronrod - gauss) * std::fabs(h);
  error = std::pow(200.0 * diff, 1.5);
  if (!(error < diff)) error = diff;
}

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration of f over [a, b].
/// `hints` lists interior points where the integrand is non-smooth
/// (e.g. CDF jumps); the domain is pre-split there.
template <class F>
QuadratureResult integrate(const F& f, double a, double b,
                           const QuadratureSpec& spec = {},
                           std::span<const double> hints = {}) {
  QuadratureResult result;
  if (a == b) {
    result.converged = true;
    return result;
  }
  if (!(a < b)) throw std::invalid_argument("integrate: need a < b");
  std::vector<double> cuts;
  cuts.push_back(a);
  for (double h : hints)
    if (h > a && h < b) cuts.push_back(h);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<detail::Segment> heap;
  double total = 0.0, total_err = 0.0;
  std::size_t evals = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    detail::Segment s{cuts[i], cuts[i + 1], 0.0, 0.0};
    detail::gk15(f, s.a, s.b, s.value, s.error);
    evals += 15;
    total += s.value;
    total_err += s.error;
    heap.push(s);
  }
  const std::size_t max_evals = 4'000'000;
  while (total_err > std::max(spec.abs_tol, spec.rel_tol * std::fabs(total)) &&
         evals < max_evals) {
    detail::Segment s = heap.top();
    heap.pop();
    const double mid = 0.5 * (s.a + s.b);
    if (mid <= s.a || mid >= s.b) {  // interval at double resolution
      total_err -= s.error;
      continue;
    }
    detail::Segment left{s.a, mid, 0.0, 0.0};
    detail::Segment right{mid, s.b, 0.0, 0.0};
    detail::gk15(f, left.a, left.b, left.value, left.error);
    detail::gk15(f, right.a, right.b, right.value, right.error);
    evals += 30;
    total += left.value + right.value - s.value;
    total_err += left.error + right.error - s.error;
    heap.push(left);
    heap.push(right);
  }
  result.value = total;
  result.error = total_err;
  result.evaluations = evals;
  result.converged =
      total_err <= std::max(spec.abs_tol, spec.rel_tol * std::fabs(total));
  return result;
}

/// Nested 2-D integration: outer over x in [ax, bx], inner over y in
/// [ay, by].  `inner_hints(x)` may list y-values where f(x, .) jumps;
/// `outer_hints` pre-splits the x-range.
template <class F, class HintFn>
QuadratureResult integrate_2d(const F& f, double ax, double bx, double ay,
                              double by, const QuadratureSpec& spec,
                              std::span<const double> outer_hints,
                              const HintFn& inner_hints) {
  QuadratureSpec inner_spec;
  inner_spec.rel_tol = std::max(spec.rel_tol * 0.1, 1e-12);
  inner_spec.abs_tol = spec.abs_tol * 0.1;
  std::size_t inner_evals = 0;
  bool inner_ok = true;
  auto outer = [&](double x) {
    const std::vector<double> hints = inner_hints(x);
    auto res = integrate([&](double y) { return f(x, y); }, ay, by, inner_spec,
                         hints);
    inner_evals += res.evaluations;
    inner_ok = inner_ok && res.converged;
    return res.value;
  };
  QuadratureResult result = integrate(outer, ax, bx, spec, outer_hints);
  result.evaluations += inner_evals;
  result.converged = result.converged && inner_ok;
  return result;
}

}  // namespace coalsim
