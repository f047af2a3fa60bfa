// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "coalsim/special_functions.hpp"

namespace coalsim {

/// Neumaier-compensated running sum; summation order is fixed by the caller,
/// so reductions are reproducible.
class CompensatedSum {
 public:
  void add(double value) {
    const double t = sum_ + value;
    if (std::fabs(sum_) >= std::fabs(value))
      comp_ += (sum_ - t) + value;
    else
      comp_ += (value - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream_base = 0;
};

/// Mean and standard error of a replicate vector, reduced in index order.
inline MCEstimate summarize(std::span<const double> values,
                            std::uint64_t seed = 0,
                            std::uint64_t stream_base = 0) {
  MCEstimate est;
  est.replicates = values.size();
  est.seed = seed;
  est.stream_base = stream_base;
  if (values.empty()) return est;
  CompensatedSum s;
  for (double v : values) s.add(v);
  est.mean = s.value() / static_cast<double>(values.size());
  if (values.size() > 1) {
    CompensatedSum sq;
    for (double v : values) {
      const double d = v - est.mean;
      sq.add(d * d);
    }
    const double var = sq.value() / static_cast<double>(values.size() - 1);
    est.std_error = std::sqrt(var / static_cast<double>(values.size()));
  }
  return est;
}

/// (mean_a - mean_b) / sqrt(se_a^2 + se_b^2); a constant reference has se 0.
inline double two_sample_z(const MCEstimate& a, const MCEstimate& b) {
  const double se = std::sqrt(a.std_error * a.std_error +
                              b.std_error * b.std_error);
  const double diff = a.mean - b.mean;
  if (se == 0.0) {
    if (diff == 0.0) return 0.0;
    throw std::domain_error("two_sample_z: zero combined SE, unequal means");
  }
  return diff / se;
}

inline double two_sample_z(const MCEstimate& a, double reference) {
  return two_sample_z(a, MCEstimate{reference, 0.0, 1, 0, 0});
}

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

namespace detail {

// Pool adjacent cells until every pooled expected count is >= min_expected.
inline void pool_cells(std::vector<double>& observed,
                       std::vector<double>& expected, double min_expected) {
  std::vector<double> obs, exp;
  double acc_o = 0.0, acc_e = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    acc_o += observed[i];
    acc_e += expected[i];
    if (acc_e >= min_expected) {
      obs.push_back(acc_o);
      exp.push_back(acc_e);
      acc_o = acc_e = 0.0;
    }
  }
  if (acc_e > 0.0 || acc_o > 0.0) {
    if (exp.empty()) {
      obs.push_back(acc_o);
      exp.push_back(acc_e);
    } else {
      obs.back() += acc_o;
      exp.back() += acc_e;
    }
  }
  observed = std::move(obs);
  expected = std::move(exp);
}

}  // namespace detail

/// Goodness-of-fit chi-square of observed counts against cell probabilities.
/// Cells with expected count < 5 are pooled with neighbours.
inline ChiSquareResult chi_square_gof(std::span<const double> observed,
                                      std::span<const double> probabilities) {
  if (observed.size() != probabilities.size() || observed.size() < 2)
    throw std::invalid_argument("chi_square_gof: need >= 2 matching cells");
  double n = 0.0;
  for (double o : observed) n += o;
  std::vector<double> obs(observed.begin(), observed.end());
  std::vector<double> exp(probabilities.size());
  for (std::size_t i = 0; i < exp.size(); ++i) exp[i] = n * probabilities[i];
  detail::pool_cells(obs, exp, 5.0);
  if (obs.size() < 2)
    throw std::invalid_argument("chi_square_gof: insufficient counts");
  ChiSquareResult r;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double d = obs[i] - exp[i];
    r.statistic += d * d / exp[i];
  }
  r.dof = static_cast<int>(obs.size()) - 1;
  r.p_value = gamma_q(0.5 * r.dof, 0.5 * r.statistic);
  return r;
}

/// Two-sample chi-square homogeneity test over matching count vectors.
inline ChiSquareResult chi_square_two_sample(std::span<const double> count_a,
                                             std::span<const double> count_b) {
  if (count_a.size() != count_b.size() || count_a.size() < 2)
    throw std::invalid_argument(
        "chi_square_two_sample: need >= 2 matching cells");
  double na = 0.0, nb = 0.0;
  for (double c : count_a) na += c;
  for (double c : count_b) nb += c;
  if (na <= 0.0 || nb <= 0.0)
    throw std::invalid_argument("chi_square_two_sample: empty sample");
  // Pool on the pooled expected column totals.
  std::vector<double> a(count_a.begin(), count_a.end());
  std::vector<double> b(count_b.begin(), count_b.end());
  std::vector<double> tot(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    tot[i] = (a[i] + b[i]) * std::min(na, nb) / (na + nb);
  {
    std::vector<double> keys = tot;
    std::vector<double> merged_a, merged_b;
    double acc_key = 0.0, acc_a = 0.0, acc_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      acc_key += keys[i];
      acc_a += a[i];
      acc_b += b[i];
      if (acc_key >= 5.0) {
        merged_a.push_back(acc_a);
        merged_b.push_back(acc_b);
        acc_key = acc_a = acc_b = 0.0;
      }
    }
    if (acc_a > 0.0 || acc_b > 0.0) {
      if (merged_a.empty()) {
        merged_a.push_back(acc_a);
        merged_b.push_back(acc_b);
      } else {
        merged_a.back() += acc_a;
        merged_b.back() += acc_b;
      }
    }
    a = std::move(merged_a);
    b = std::move(merged_b);
  }
  if (a.size() < 2)
    throw std::invalid_argument("chi_square_two_sample: insufficient counts");
  ChiSquareResult r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double col = a[i] + b[i];
    if (col == 0.0) continue;
    const double ea = col * na / (na + nb);
    const double eb = col * nb / (na + nb);
    const double da = a[i] - ea;
    const double db = b[i] - eb;
    r.statistic += da * da / ea + db * db / eb;
  }
  r.dof = static_cast<int>(a.size()) - 1;
  r.p_value = gamma_q(0.5 * r.dof, 0.5 * r.statistic);
  return r;
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov against a (right-continuous) reference CDF.
/// The statistic is the maximal deviation of the empirical CDF from the
/// reference at the sample points, ties handled; a sample tested against its
/// own empirical CDF scores exactly 0.
inline KsResult ks_test(std::vector<double> samples,
                        const std::function<double(double)>& cdf) {
  if (samples.size() < 10)
    throw std::invalid_argument("ks_test: need at least 10 samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < samples.size()) {
    std::size_t j = i;
    while (j + 1 < samples.size() && samples[j + 1] == samples[i]) ++j;
    const double fn = static_cast<double>(j + 1) / n;
    d = std::max(d, std::fabs(fn - cdf(samples[i])));
    i = j + 1;
  }
  KsResult r;
  r.statistic = d;
  const double sqrt_n = std::sqrt(n);
  r.p_value = kolmogorov_tail((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
  return r;
}

/// Two-sample Kolmogorov-Smirnov with the asymptotic p-value at the
/// effective sample size n1*n2/(n1+n2).
inline KsResult ks_test_two_sample(std::vector<double> a,
                                   std::vector<double> b) {
  if (a.size() < 10 || b.size() < 10)
    throw std::invalid_argument("ks_test_two_sample: need >= 10 samples each");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na -
                              static_cast<double>(j) / nb));
  }
  KsResult r;
  r.statistic = d;
  const double ne = std::sqrt(na * nb / (na + nb));
  r.p_value = kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d);
  return r;
}

}  // namespace coalsim
