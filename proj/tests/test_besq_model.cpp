// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "coalsim/besq_model.hpp"
#include "doctest.h"

using namespace coalsim;

namespace {
const std::uint64_t kSeed = 888;
int threads() { return default_thread_count(); }
}  // namespace

TEST_SUITE_BEGIN("besq-model");

TEST_CASE("zero dimension measure degenerates to the gamma-4 mass model") {
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  const DimensionSpec none{InitialMeasure::zero()};
  const std::size_t n = 100'000;
  const auto totals = run_replicates(
      kSeed, 0, n, threads(), [&](RngStream& rng, std::size_t) {
        return besq_model_simulate(z0, none, 8, 1.0, 1e-2, rng)
            .mass.total_mass();
      });
  const auto feller_totals = run_replicates(
      kSeed, 1'000'000ull, n, threads(), [&](RngStream& rng, std::size_t) {
        return feller_transition(1.0, 1.0, FellerParams{4.0}, rng);
      });
  const auto ks = ks_test_two_sample(
      std::vector<double>(totals.begin(), totals.end()),
      std::vector<double>(feller_totals.begin(), feller_totals.end()));
  CHECK(ks.p_value > 0.001);
}

TEST_CASE("mean total mass grows linearly with the dimension mean") {
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  const DimensionSpec dim{InitialMeasure::atoms({{2.0, 1.0}})};  // mu = 2
  const double t = 0.7;
  const auto est = monte_carlo(
      kSeed, 5, 200'000, threads(), [&](RngStream& rng, std::size_t) {
        return besq_model_simulate(z0, dim, 16, t, 1e-2, rng)
            .mass.total_mass();
      });
  CHECK(std::fabs(est.mean - (1.0 + 2.0 * t)) < 3.0 * est.std_error);
}

TEST_CASE("dimension weights are conserved along the path") {
  RngStream rng(90, 0);
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  const DimensionSpec dim{
      InitialMeasure::atoms({{1.0, 0.5}, {3.0, 0.5}})};  // dbar = 1
  for (int rep = 0; rep < 100; ++rep) {
    const auto s = besq_model_simulate(z0, dim, 8, 0.5, 1e-2, rng);
    // total dimension weight: dbar * (sum d_i) / m; all d_i in {1, 3}
    const double total = s.dimension.total_mass();
    CHECK(total >= 1.0 - 1e-12);
    CHECK(total <= 3.0 + 1e-12);
    CHECK(std::fabs(total * 8.0 - std::round(total * 8.0)) < 1e-9);
  }
}

TEST_CASE("all-zero weights give the trivial functional on all routes") {
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  const DimensionSpec dim{InitialMeasure::atoms({{2.0, 1.0}})};
  IntervalUnion u;
  u.endpoints = {-1.0, 1.0};
  u.weights = {0.0};
  u.weights_b = {0.0};
  const auto rep = besq_duality_check(z0, dim, 8, 1.0, u, 1e-2, 300, kSeed, 0,
                                      threads());
  CHECK(rep.forward.mean == 1.0);
  CHECK(rep.dual.mean == 1.0);
  CHECK(rep.limit.mean == 1.0);
}

TEST_CASE("beta-only weights reduce the limit integrand to (mu/zbar) beta") {
  // with alpha = 0 the limit weight must be exactly (mu/zbar) * beta
  const auto z0 = InitialMeasure::atoms({{0.0, 2.0}});
  const DimensionSpec dim{InitialMeasure::atoms({{1.5, 2.0}})};
  // mu = 3, zbar = 2 -> weight = 1.5 * beta
  IntervalUnion u;
  u.endpoints = {-1.0, 1.0};
  u.weights = {0.0};
  u.weights_b = {0.8};
  const auto rep = besq_duality_check(z0, dim, 16, 1.0, u, 1e-2, 100'000,
                                      kSeed, 0, threads());
  // dual interval from (-1,1) at t=1 contains the atom at 0 or not; the
  // limit route must agree with the forward route within noise
  CHECK(std::fabs(rep.z_forward_limit) <= 3.5);
}

TEST_CASE("finite-m duality holds exactly at small m") {
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  const DimensionSpec dim{InitialMeasure::atoms({{2.0, 1.0}})};
  IntervalUnion u;
  u.endpoints = {-1.0, 1.0};
  u.weights = {1.0};
  u.weights_b = {1.0};
  const auto rep = besq_duality_check(z0, dim, 8, 1.0, u, 1e-3, 100'000, kSeed,
                                      0, threads());
  CHECK(std::fabs(rep.z_forward_dual) <= 3.0);
}

TEST_SUITE_END();
