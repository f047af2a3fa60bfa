// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "coalsim/closedform.hpp"
#include "coalsim/scsm.hpp"
#include "doctest.h"

using namespace coalsim;

namespace {
const std::uint64_t kSeed = 999;
int threads() { return default_thread_count(); }
}  // namespace

TEST_SUITE_BEGIN("closedform");

TEST_CASE("rotated coordinates") {
  const auto t1 = rotate_coords(1.0, 1.0, 0.0, 0.0);
  CHECK(t1.x_tilt == doctest::Approx(0.0));
  CHECK(t1.y_tilt == doctest::Approx(std::sqrt(2.0)));
  CHECK(t1.a_tilt == 0.0);
  CHECK(t1.b_tilt == 0.0);
  const auto t2 = rotate_coords(1.0, -1.0, 0.0, 0.0);
  CHECK(t2.x_tilt == doctest::Approx(std::sqrt(2.0)));
  CHECK(t2.y_tilt == doctest::Approx(0.0));

  RngStream rng(80, 0);
  for (int i = 0; i < 200; ++i) {
    const double x = 4.0 * rng.uniform01() - 2.0;
    const double y = 4.0 * rng.uniform01() - 2.0;
    const auto r = rotate_coords(x, y, 0.3, 1.7);
    CHECK(r.x_tilt * r.x_tilt + r.y_tilt * r.y_tilt ==
          doctest::Approx(x * x + y * y).epsilon(1e-13));
  }
}

TEST_CASE("emptiness probability of an uncharged interval is one") {
  const auto zero = InitialMeasure::zero();
  CHECK(prob_interval_empty(zero, -1.0, 1.0, 1.0, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-7));
  CHECK_THROWS_AS(prob_interval_empty(zero, 1.0, -1.0, 1.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("emptiness probability against the exact-pair oracle") {
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  const double quad = prob_interval_empty(z0, -1.0, 1.0, 1.0, 1.0);
  const auto mc =
      prob_interval_empty_mc(z0, -1.0, 1.0, 1.0, 1.0, 1'000'000, kSeed, 0,
                             threads());
  CHECK(std::fabs(quad - mc.mean) < 3.0 * mc.std_error);
  CHECK(quad > 0.0);
  CHECK(quad < 1.0);
}

TEST_CASE("a very wide interval reproduces total extinction") {
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  const double wide = prob_interval_empty(z0, -50.0, 50.0, 1.0, 1.0);
  CHECK(wide == doctest::Approx(std::exp(-2.0)).epsilon(1e-6));
}

TEST_CASE("emptiness probability shrinks as the interval grows") {
  const auto z0 =
      InitialMeasure::atoms({{-0.5, 0.6}, {0.5, 0.4}});
  double prev = 1.0;
  for (double half : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double v = prob_interval_empty(z0, -half, half, 1.0, 1.0, {});
    CHECK(v <= prev + 1e-9);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    prev = v;
  }
}

TEST_CASE("emptiness probability against a forward particle simulation") {
  const auto z0 = InitialMeasure::atoms({{-0.5, 0.6}, {0.5, 0.4}});
  const double quad = prob_interval_empty(z0, -1.0, 1.0, 1.0, 1.0);
  const auto direct = monte_carlo(
      kSeed, 17, 100'000, threads(), [&](RngStream& rng, std::size_t) {
        const auto z = simulate_zm(z0, 200, 1.0, 1.0, 1e-3, rng);
        return z.interval_mass(-1.0, 1.0) == 0.0 ? 1.0 : 0.0;
      });
  // finite-m and step allowances on top of 3 sigma
  CHECK(std::fabs(quad - direct.mean) <
        3.0 * direct.std_error + 0.5 / 200.0 + 1e-3);
}

TEST_CASE("expected support count: bounds and oracles") {
  const auto z0 = InitialMeasure::atoms({{-0.5, 0.6}, {0.5, 0.4}});
  const double count = expected_support_count(z0, -1.0, 1.0, 1.0, 1.0);
  CHECK(count >= 0.0);
  CHECK(count <= 2.0 / std::sqrt(3.1415926535897932385));

  const auto zero = InitialMeasure::zero();
  CHECK(expected_support_count(zero, -1.0, 1.0, 1.0, 1.0) ==
        doctest::Approx(0.0).epsilon(1e-7));

  const auto mc = expected_support_count_mc(z0, -1.0, 1.0, 1.0, 1.0,
                                            1'000'000, kSeed, 0, threads());
  CHECK(std::fabs(count - mc.mean) < 4.0 * mc.std_error);

  const auto direct = monte_carlo(
      kSeed, 23, 10'000, threads(), [&](RngStream& rng, std::size_t) {
        const auto z = simulate_zm(z0, 200, 1.0, 1.0, 1e-3, rng);
        return static_cast<double>(z.support_count_in(-1.0, 1.0));
      });
  CHECK(std::fabs(count - direct.mean) <
        3.0 * direct.std_error + 0.5 / 200.0 + 1e-2);
}

TEST_CASE("point-mass transform: consistency at lambda 0 and decay") {
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  const double at0 = point_mass_laplace_interval(z0, -1.0, 1.0, 1.0, 1.0, 0.0);
  const double empty = prob_interval_empty(z0, -1.0, 1.0, 1.0, 1.0);
  CHECK(at0 == doctest::Approx(1.0 - empty).epsilon(1e-6));
  double prev = at0;
  for (double lambda : {0.5, 1.0, 2.0, 8.0, 64.0}) {
    const double v =
        point_mass_laplace_interval(z0, -1.0, 1.0, 1.0, 1.0, lambda);
    CHECK(v >= -1e-9);
    CHECK(v <= prev + 1e-9);
    prev = v;
  }
}

TEST_CASE("point-mass transform against both oracles") {
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  const double quad =
      point_mass_laplace_interval(z0, -1.0, 1.0, 1.0, 1.0, 1.0);
  const auto pair_mc = point_mass_laplace_interval_mc(
      z0, -1.0, 1.0, 1.0, 1.0, 1.0, 1'000'000, kSeed, 0, threads());
  CHECK(std::fabs(quad - pair_mc.mean) < 3.0 * pair_mc.std_error);

  const auto direct = monte_carlo(
      kSeed, 29, 100'000, threads(), [&](RngStream& rng, std::size_t) {
        const auto z = simulate_zm(z0, 64, 1.0, 1.0, 1e-3, rng);
        const double q = z.interval_mass(-1.0, 1.0);
        return q > 0.0 ? std::exp(-q) : 0.0;
      });
  CHECK(std::fabs(quad - direct.mean) < 3.0 * direct.std_error + 1e-3);
}

TEST_CASE("survivor range: limits") {
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  // whole-line window at lambda 0 leaves the survival probability
  const double wide = last_particle_range(z0, -60.0, 60.0, 1.0, 1.0, 0.0);
  CHECK(wide == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-6));
  // shrinking window
  const double narrow =
      last_particle_range(z0, -1e-4, 1e-4, 1.0, 1.0, 0.0);
  CHECK(std::fabs(narrow) < 1e-3);
}

TEST_CASE("survivor range against simulation at unit total mass") {
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  const double quad = last_particle_range(z0, -2.0, 2.0, 1.0, 1.0, 0.0);
  const auto direct = monte_carlo(
      kSeed, 31, 100'000, threads(), [&](RngStream& rng, std::size_t) {
        const auto z = simulate_zm(z0, 64, 1.0, 1.0, 1e-3, rng);
        if (z.total_mass() == 0.0) return 0.0;
        for (const auto& atom : z.atoms)
          if (atom.location <= -2.0 || atom.location >= 2.0) return 0.0;
        return 1.0;
      });
  CHECK(std::fabs(quad - direct.mean) < 3.0 * direct.std_error + 1e-3);
}

TEST_CASE("survivor range boundary term: printed vs total-mass form") {
  // at zbar = 1 the two conventions coincide
  const auto unit = InitialMeasure::atoms({{0.0, 1.0}});
  const double printed =
      last_particle_range(unit, -0.5, 0.5, 1.0, 1.0, 0.0, {},
                          RangeBoundaryTerm::kAsPrinted);
  const double mass_form =
      last_particle_range(unit, -0.5, 0.5, 1.0, 1.0, 0.0, {},
                          RangeBoundaryTerm::kTotalMass);
  CHECK(printed == doctest::Approx(mass_form).epsilon(1e-12));

  // at zbar = 2 only the total-mass form tracks the pair-exact oracle
  const auto heavy = InitialMeasure::atoms({{0.0, 2.0}});
  const auto mc = last_particle_range_mc(heavy, -0.5, 0.5, 1.0, 1.0, 0.0,
                                         1'000'000, kSeed, 0, threads());
  const double printed2 =
      last_particle_range(heavy, -0.5, 0.5, 1.0, 1.0, 0.0, {},
                          RangeBoundaryTerm::kAsPrinted);
  const double mass2 =
      last_particle_range(heavy, -0.5, 0.5, 1.0, 1.0, 0.0, {},
                          RangeBoundaryTerm::kTotalMass);
  CHECK(std::fabs(mass2 - mc.mean) <= 3.0 * mc.std_error);
  CHECK(std::fabs(printed2 - mc.mean) > 10.0 * mc.std_error);
}

TEST_CASE("extinction-time CDF") {
  CHECK(extinction_time_cdf(1.0, 1.0, 1.0) ==
        doctest::Approx(0.1353352832366127).epsilon(1e-14));
  CHECK(extinction_time_cdf(1.0, 1.0, 1e12) == doctest::Approx(1.0));
  CHECK(extinction_time_cdf(1e-14, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(extinction_time_cdf(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("single-survivor time CDF: limits and final-term conventions") {
  const auto z0 = InitialMeasure::atoms({{-0.5, 0.5}, {0.5, 0.5}});
  // immediately after the start two particles are still alive
  CHECK(single_survivor_time_cdf(z0, 1e-4, 1.0) < 1e-8);
  // eventually the system passes through a single survivor
  CHECK(single_survivor_time_cdf(z0, 1e6, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-4));
  // monotone in t
  double prev = 0.0;
  for (double t : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double v = single_survivor_time_cdf(z0, t, 1.0);
    CHECK(v >= prev - 1e-9);
    CHECK(v <= 1.0 + 1e-9);
    prev = v;
  }
  // the literally printed final term is not a probability
  const double printed = single_survivor_time_cdf(
      z0, 1.0, 1.0, {}, SurvivorFinalTerm::kAsPrinted);
  CHECK(printed < 0.0);
}

TEST_CASE("single-survivor time CDF against its kernel oracle") {
  const auto z0 = InitialMeasure::atoms({{-0.5, 0.5}, {0.5, 0.5}});
  const double quad = single_survivor_time_cdf(z0, 1.0, 1.0);
  const auto mc =
      single_survivor_time_mc(z0, 1.0, 1.0, 2'000'000, kSeed, 0, threads());
  CHECK(std::fabs(quad - mc.mean) < 4.0 * mc.std_error);
}

TEST_CASE("single-survivor time CDF against path simulation") {
  const auto z0 = InitialMeasure::atoms({{-0.5, 0.5}, {0.5, 0.5}});
  const double quad = single_survivor_time_cdf(z0, 1.0, 1.0);
  std::vector<double> grid;
  for (int k = 1; k <= 200; ++k) grid.push_back(k / 200.0);
  const auto est = monte_carlo(
      kSeed, 37, 50'000, threads(), [&](RngStream& rng, std::size_t) {
        const auto obs =
            simulate_path(z0, 16, 1.0, grid, 1.0 / 200.0, rng, false);
        return (obs.single_block_time >= 0.0 || obs.extinct) ? 1.0 : 0.0;
      });
  // grid-resolution allowance: single-survivor phases shorter than one grid
  // interval are invisible
  CHECK(std::fabs(quad - est.mean) < 3.0 * est.std_error + 0.01);
}

TEST_CASE("last-location CDF: symmetry and tails") {
  const auto z0 = InitialMeasure::atoms({{-1.0, 0.5}, {1.0, 0.5}});
  CHECK(last_location_cdf(z0, 1.0, 0.0) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(last_location_cdf(z0, 1.0, 500.0) ==
        doctest::Approx(1.0).epsilon(1e-4));
  CHECK(last_location_cdf(z0, 1.0, -500.0) ==
        doctest::Approx(0.0).epsilon(1e-4).scale(1.0));
}

TEST_CASE("last-location CDF against the direct sampler") {
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  for (double z : {-1.0, 0.0, 0.7, 2.0}) {
    const double quad = last_location_cdf(z0, 1.0, z);
    const auto mc =
        last_location_cdf_mc(z0, 1.0, z, 1'000'000, kSeed, 0, threads());
    CHECK(std::fabs(quad - mc.mean) < 4.0 * mc.std_error);
  }
}

TEST_CASE("occupation time of an uncharged interval is the horizon") {
  const auto zero = InitialMeasure::zero();
  CHECK(occupation_zero(zero, -1.0, 1.0, 2.5, 1.0) ==
        doctest::Approx(2.5).epsilon(1e-5));
}

TEST_CASE("occupation time is monotone in the horizon") {
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  double prev = 0.0;
  for (double t : {0.5, 1.0, 2.0}) {
    const double v = occupation_zero(z0, -1.0, 1.0, t, 1.0);
    CHECK(v >= prev - 1e-7);
    prev = v;
  }
}

TEST_CASE("occupation time against the chained time-average") {
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  const double quad = occupation_zero(z0, -1.0, 1.0, 1.0, 1.0);
  const auto mc = occupation_zero_mc(z0, 64, 1.0, -1.0, 1.0, 1.0, 200, 1e-3,
                                     20'000, kSeed, 0, threads());
  CHECK(std::fabs(quad - mc.mean) < 3.0 * mc.std_error + 0.01);
}

TEST_SUITE_END();
