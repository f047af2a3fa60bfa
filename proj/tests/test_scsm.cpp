// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "coalsim/closedform.hpp"
#include "coalsim/scsm.hpp"
#include "doctest.h"

using namespace coalsim;

namespace {
const std::uint64_t kSeed = 777;
int threads() { return default_thread_count(); }
}  // namespace

TEST_SUITE_BEGIN("scsm");

TEST_CASE("particle initialization") {
  RngStream rng(70, 0);
  const auto point = InitialMeasure::atoms({{0.0, 1.0}});
  const auto cloud = init_particles(point, 4, rng);
  CHECK(cloud.positions == std::vector<double>{0.0, 0.0, 0.0, 0.0});
  CHECK(cloud.masses == std::vector<double>(4, 0.25));
  double total = 0.0;
  for (double m : cloud.masses) total += m;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(init_particles(point, 0, rng), std::invalid_argument);
}

TEST_CASE("total mass of the particle system is one branching law") {
  // P{Z_t(R) = 0} = exp(-2 zbar/(gamma t)) for every particle count
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  const std::size_t n = 1'000'000;
  const auto est = monte_carlo(kSeed, 0, n, threads(),
                               [&](RngStream& rng, std::size_t) {
                                 const auto z =
                                     simulate_zm(z0, 8, 1.0, 1.0, 1e-3, rng);
                                 return z.total_mass() == 0.0 ? 1.0 : 0.0;
                               });
  const double exact = std::exp(-2.0);
  CHECK(std::fabs(est.mean - exact) < 0.00103);

  const auto mean_mass = monte_carlo(
      kSeed, 1'000'000'000ull, 200'000, threads(),
      [&](RngStream& rng, std::size_t) {
        return simulate_zm(z0, 8, 1.0, 1.0, 1e-3, rng).total_mass();
      });
  CHECK(std::fabs(mean_mass.mean - 1.0) < 3.0 * mean_mass.std_error);
}

TEST_CASE("total-mass transform matches one branching law at several points") {
  const auto z0 = InitialMeasure::piecewise_uniform({-1.0, 1.0}, {1.5});
  const double gamma = 1.0, t = 1.0;
  int k = 0;
  for (double lambda : {0.5, 1.0, 2.0}) {
    const auto est = monte_carlo(
        kSeed, std::uint64_t(k++) << 32, 200'000, threads(),
        [&](RngStream& rng, std::size_t) {
          const auto z = simulate_zm(z0, 16, gamma, t, 1e-2, rng);
          return std::exp(-lambda * z.total_mass());
        });
    const double exact = feller_laplace(lambda, 1.5, t, gamma);
    CHECK(std::fabs(est.mean - exact) < 3.0 * est.std_error);
  }
}

TEST_CASE("single-interval avoidance reduces to the emptiness law") {
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  IntervalUnion u;
  u.endpoints = {-1.0, 1.0};
  u.weights = {1.0};
  const auto rep = cox_avoidance_check(z0, 64, 1.0, 1.0, u, 1e-3, 100'000,
                                       kSeed, 0, threads());
  const double exact = prob_interval_empty(z0, -1.0, 1.0, 1.0, 1.0);
  CHECK(std::fabs(rep.direct.mean - exact) < 3.0 * rep.direct.std_error);
  CHECK(std::fabs(rep.dual.mean - exact) < 3.0 * rep.dual.std_error);
}

TEST_CASE("a single particle is one atom at a Gaussian location") {
  RngStream rng(71, 0);
  const auto z0 = InitialMeasure::atoms({{0.5, 2.0}});
  for (int i = 0; i < 200; ++i) {
    const auto z = simulate_zm(z0, 1, 1.0, 1.0, 1e-2, rng);
    CHECK(z.atoms.size() <= 1);
  }
}

TEST_CASE("laplace functional with zero weights is exactly one") {
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  IntervalUnion u;
  u.endpoints = {-1.0, 1.0};
  u.weights = {0.0};
  const auto lhs = laplace_lhs_mc(z0, 16, 1.0, 1.0, u, 1e-2, 500, kSeed, 0,
                                  threads());
  CHECK(lhs.mean == 1.0);
  CHECK(lhs.std_error == 0.0);
  const auto rhs =
      laplace_rhs_mc(z0, 1.0, 1.0, u, 1e-2, 500, kSeed, 0, threads());
  CHECK(rhs.mean == 1.0);
}

TEST_CASE("dual functional at vanishing horizon returns the plain integral") {
  const auto z0 = InitialMeasure::piecewise_uniform({-0.5, 0.5}, {1.0});
  IntervalUnion u;
  u.endpoints = {-0.25, 0.25};
  u.weights = {1.3};
  const double t = 1e-4;
  const auto rhs =
      laplace_rhs_mc(z0, 1.0, t, u, 1e-5, 200'000, kSeed, 0, threads());
  const double expected = std::exp(
      -2.0 * 1.3 / (2.0 + 1.0 * t * 1.3) * z0.interval_mass(-0.25, 0.25));
  CHECK(std::fabs(rhs.mean - expected) < 3.0 * rhs.std_error + 1e-3);
}

TEST_CASE("saturating weight recovers the emptiness probability") {
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  IntervalUnion u;
  u.endpoints = {-1.0, 1.0};
  u.weights = {1e6};
  const std::size_t n = 200'000;
  const auto lhs =
      laplace_lhs_mc(z0, 64, 1.0, 1.0, u, 1e-3, n, kSeed, 0, threads());
  const double exact = prob_interval_empty(z0, -1.0, 1.0, 1.0, 1.0);
  CHECK(std::fabs(lhs.mean - exact) < 3.0 * lhs.std_error + 1e-4);

  // dual side: the image weight saturates at 2/(gamma t)
  const auto rhs =
      laplace_rhs_mc(z0, 1.0, 1.0, u, 1e-3, n, kSeed, 1, threads());
  CHECK(std::fabs(rhs.mean - exact) < 3.0 * rhs.std_error + 1e-4);
}

TEST_CASE("moment identities, single interval from a point mass") {
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  IntervalUnion u;
  u.endpoints = {-1.0, 1.0};
  u.weights = {1.0};
  const auto rep = moment_check(z0, 32, 1.0, 1.0, u, 1e-3, 100'000, kSeed, 0,
                                threads());
  CHECK(std::fabs(rep.first_z) <= 3.0);
  CHECK(std::fabs(rep.second_z) <= 3.0);

  IntervalUnion zero = u;
  zero.weights = {0.0};
  const auto rep0 = moment_check(z0, 8, 1.0, 1.0, zero, 1e-2, 500, kSeed, 0,
                                 threads());
  CHECK(rep0.first_lhs.mean == 0.0);
  CHECK(rep0.first_rhs.mean == 0.0);
}

TEST_CASE("path observables: extinction law and monotone support counts") {
  const auto z0 = InitialMeasure::atoms({{-0.5, 0.5}, {0.5, 0.5}});
  std::vector<double> grid;
  for (int k = 1; k <= 200; ++k) grid.push_back(k / 200.0);
  const std::size_t n = 20'000;
  const auto values = run_replicates(
      kSeed, 42, n, threads(), [&](RngStream& rng, std::size_t) {
        const auto obs = simulate_path(z0, 16, 1.0, grid, 1.0 / 200.0, rng);
        for (std::size_t k = 0; k + 1 < obs.support_counts.size(); ++k)
          if (obs.support_counts[k] < obs.support_counts[k + 1])
            throw std::logic_error("support count increased");
        return obs.extinct ? 1.0 : 0.0;
      });
  const auto est = summarize(values);
  // mass zero is absorbing, so {extinct by the last grid time} is exact
  const double exact = std::exp(-2.0);
  CHECK(std::fabs(est.mean - exact) < 3.0 * est.std_error + 1e-12);
}

TEST_CASE("flow transport: no initial mass in the span gives zero measure") {
  RngStream rng(72, 0);
  const auto z0 = InitialMeasure::atoms({{10.0, 1.0}});
  const auto grid = flow_grid(4, -1.0, 1.0, 0.5, 1e-3, rng);
  CHECK(flow_uncovered_mass(z0, grid) == doctest::Approx(1.0));
  const auto z = flow_construct_zt(z0, 1.0, 0.5, grid, rng);
  CHECK(z.atoms.empty());
}

TEST_CASE("flow transport: covered mass obeys the branching extinction law") {
  const auto z0 = InitialMeasure::piecewise_uniform({0.0, 1.0}, {1.0});
  const double t = 0.5, gamma = 1.0;
  const std::size_t n = 200'000;
  const auto est = monte_carlo(
      kSeed, 7, n, threads(), [&](RngStream& rng, std::size_t) {
        const auto grid = flow_grid(5, -0.5, 1.5, t, 1e-3 * t, rng);
        const auto z = flow_construct_zt(z0, gamma, t, grid, rng);
        return z.total_mass() == 0.0 ? 1.0 : 0.0;
      });
  const double exact = std::exp(-2.0 * 1.0 / (gamma * t));
  CHECK(std::fabs(est.mean - exact) < 3.0 * est.std_error + 1e-4);
}

TEST_CASE("avoidance probability: empty union is certain") {
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  IntervalUnion empty;
  const auto rep = cox_avoidance_check(z0, 8, 1.0, 1.0, empty, 1e-2, 200,
                                       kSeed, 0, threads());
  CHECK(rep.direct.mean == 1.0);
  CHECK(rep.dual.mean == 1.0);
  CHECK(rep.z == 0.0);
}

TEST_CASE("avoidance probability: two disjoint intervals agree with dual") {
  const auto z0 = InitialMeasure::piecewise_uniform({-1.0, 1.0}, {1.0});
  IntervalUnion u;
  u.endpoints = {-0.8, -0.2, 0.2, 0.8};
  u.weights = {1.0, 1.0};
  const auto rep = cox_avoidance_check(z0, 200, 1.0, 1.0, u, 1e-3, 100'000,
                                       kSeed, 0, threads());
  // finite-m bias is below comparison resolution at m = 200
  CHECK(std::fabs(rep.z) <= 3.5);
}

TEST_SUITE_END();
