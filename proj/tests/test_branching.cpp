// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "coalsim/branching.hpp"
#include "coalsim/stats.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace coalsim;

TEST_SUITE_BEGIN("branching");

TEST_CASE("branching transition transform: direct evaluations") {
  CHECK(feller_laplace(1.0, 1.0, 1.0, 2.0) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  CHECK(feller_laplace(0.0, 3.7, 0.2, 1.1) == 1.0);
  // lambda -> infinity recovers the extinction probability
  CHECK(feller_laplace(1e13, 1.0, 1.0, 1.0) ==
        doctest::Approx(std::exp(-2.0)).epsilon(1e-9));
  CHECK(feller_extinction_probability(1.0, 1.0, 1.0) ==
        doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(feller_laplace(-1.0, 1.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(feller_laplace(1.0, -1.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(feller_laplace(1.0, 1.0, 0.0, 1.0), std::invalid_argument);
}

// The sampler builds a compound Poisson variable: N ~ Poisson(2x/(gamma t))
// jumps of Exponential(gamma t / 2) size.  Its transform
// exp(-theta lambda m0/(1 + lambda m0)) must agree with the transition
// transform identically; checked on a parameter grid before trusting the
// sampler anywhere else.
TEST_CASE("compound-Poisson construction reproduces the Feller transform") {
  for (double lambda : {0.0, 0.3, 1.0, 4.5}) {
    for (double x : {0.0, 0.4, 1.0, 3.0}) {
      for (double t : {0.25, 1.0, 2.0}) {
        for (double gamma : {0.5, 1.0, 2.0}) {
          const double theta = 2.0 * x / (gamma * t);
          const double m0 = 0.5 * gamma * t;
          const double compound =
              std::exp(-theta * lambda * m0 / (1.0 + lambda * m0));
          CHECK(compound ==
                doctest::Approx(feller_laplace(lambda, x, t, gamma))
                    .epsilon(1e-14));
        }
      }
    }
  }
}

TEST_CASE("Feller transition sampler hits the exact law") {
  RngStream rng(100, 0);
  const FellerParams params{1.0};
  for (int i = 0; i < 1000; ++i)
    CHECK(feller_transition(0.0, 1.0, params, rng) == 0.0);
  CHECK_THROWS_AS(feller_transition(-1.0, 1.0, params, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(feller_transition(1.0, 0.0, params, rng),
                  std::invalid_argument);

  const std::size_t n = 1'000'000;
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (feller_transition(1.0, 1.0, params, rng) == 0.0) ++zeros;
  CHECK(std::fabs(static_cast<double>(zeros) / n - std::exp(-2.0)) < 0.00103);

  // E[exp(-xi)] at gamma = 2 against the transform
  const FellerParams p2{2.0};
  std::vector<double> vals(n);
  for (std::size_t i = 0; i < n; ++i)
    vals[i] = std::exp(-feller_transition(1.0, 1.0, p2, rng));
  const MCEstimate est = summarize(vals);
  CHECK(std::fabs(est.mean - 0.6065306597126334) < 3.0 * est.std_error);
}

TEST_CASE("Feller transition is a martingale in the mean") {
  RngStream rng(101, 0);
  const std::size_t n = 1'000'000;
  for (double x : {0.5, 1.0, 2.0}) {
    for (double t : {0.5, 1.0, 2.0}) {
      for (double gamma : {0.5, 1.0, 2.0}) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          sum += feller_transition(x, t, FellerParams{gamma}, rng);
        // Var(xi_t) = x gamma t
        CHECK(std::fabs(sum / n - x) < 3.0 * std::sqrt(x * gamma * t / n));
      }
    }
  }
}

TEST_CASE("independent Feller transitions are additive in law") {
  RngStream rng(102, 0);
  const FellerParams params{1.3};
  const std::size_t n = 100'000;
  std::vector<double> split(n), joint(n);
  for (std::size_t i = 0; i < n; ++i)
    split[i] = feller_transition(0.7, 0.8, params, rng) +
               feller_transition(0.5, 0.8, params, rng);
  for (std::size_t i = 0; i < n; ++i)
    joint[i] = feller_transition(1.2, 0.8, params, rng);
  const KsResult ks = ks_test_two_sample(split, joint);
  CHECK(ks.p_value > 0.001);
}

TEST_CASE("squared-Bessel transform: direct evaluations") {
  CHECK(besq_laplace(1.0, 0.0, 1.0, 2.0) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(besq_laplace(0.0, 5.0, 2.0, 3.0) == 1.0);
  CHECK(besq_laplace(1.0, 1.0, 1.0, 2.0) ==
        doctest::Approx(std::exp(-1.0 / 3.0) / 3.0).epsilon(1e-14));
  CHECK_THROWS_AS(besq_laplace(1.0, 1.0, 1.0, -0.1), std::invalid_argument);
}

// Mixture oracle: sum_k Poisson(x/2t)(k) * (1 + 2 lambda t)^-(delta/2 + k)
// must reproduce the transform; validates the sampler's construction.
TEST_CASE("Poisson-Gamma mixture reproduces the squared-Bessel transform") {
  for (double lambda : {0.0, 0.5, 2.0}) {
    for (double x : {0.0, 1.0, 2.5}) {
      for (double t : {0.5, 1.0}) {
        for (double delta : {0.0, 0.7, 2.0, 4.0}) {
          const double rate = x / (2.0 * t);
          double mix = 0.0;
          for (long long k = 0; k < 200; ++k) {
            const double pk = x > 0.0 ? oracle::poisson_pmf(k, rate)
                                      : (k == 0 ? 1.0 : 0.0);
            mix += pk * std::pow(1.0 + 2.0 * lambda * t,
                                 -(0.5 * delta + static_cast<double>(k)));
            if (x == 0.0) break;
          }
          CHECK(mix == doctest::Approx(besq_laplace(lambda, x, t, delta))
                           .epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("squared-Bessel transition sampler") {
  RngStream rng(103, 0);
  for (int i = 0; i < 100; ++i)
    CHECK(besq_transition(0.0, 1.0, BesqParams{0.0}, rng) == 0.0);
  CHECK_THROWS_AS(besq_transition(-1.0, 1.0, BesqParams{1.0}, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(besq_transition(1.0, 1.0, BesqParams{-1.0}, rng),
                  std::invalid_argument);

  const std::size_t n = 1'000'000;
  std::vector<double> vals(n);
  for (std::size_t i = 0; i < n; ++i)
    vals[i] = std::exp(-besq_transition(1.0, 1.0, BesqParams{2.0}, rng));
  const MCEstimate est = summarize(vals);
  CHECK(std::fabs(est.mean - 0.23884377019126307) < 3.0 * est.std_error);

  // mean x + delta t, variance 2 delta t^2 + 4 x t
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    sum += besq_transition(1.0, 0.5, BesqParams{3.0}, rng);
  const double var = 2.0 * 3.0 * 0.25 + 4.0 * 1.0 * 0.5;
  CHECK(std::fabs(sum / n - 2.5) < 3.0 * std::sqrt(var / n));
}

TEST_CASE("dimension zero matches the Feller law at gamma = 4") {
  RngStream rng(104, 0);
  const std::size_t n = 100'000;
  std::vector<double> besq(n), feller(n);
  for (std::size_t i = 0; i < n; ++i)
    besq[i] = besq_transition(1.0, 1.0, BesqParams{0.0}, rng);
  for (std::size_t i = 0; i < n; ++i)
    feller[i] = feller_transition(1.0, 1.0, FellerParams{4.0}, rng);
  const KsResult ks = ks_test_two_sample(besq, feller);
  CHECK(ks.p_value > 0.001);
}

TEST_CASE("squared-Bessel additivity in dimension and start point") {
  RngStream rng(105, 0);
  const std::size_t n = 100'000;
  std::vector<double> split(n), joint(n);
  for (std::size_t i = 0; i < n; ++i)
    split[i] = besq_transition(0.6, 0.7, BesqParams{1.5}, rng) +
               besq_transition(0.9, 0.7, BesqParams{0.5}, rng);
  for (std::size_t i = 0; i < n; ++i)
    joint[i] = besq_transition(1.5, 0.7, BesqParams{2.0}, rng);
  const KsResult ks = ks_test_two_sample(split, joint);
  CHECK(ks.p_value > 0.001);
}

TEST_SUITE_END();
