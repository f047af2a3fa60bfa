// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "coalsim/experiments.hpp"

namespace coalsim {

struct AcceptanceOutcome {
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  TestReport report;
};

namespace detail {

inline std::vector<double> geometric_grid(double t0, double ratio,
                                          double t_max) {
  std::vector<double> grid;
  for (double t = t0; t <= t_max; t *= ratio) grid.push_back(t);
  return grid;
}

// One-sample KS against a precomputed CDF-at-sample table (values must be
// sorted; cdf_at[i] = F(values[i])).
inline double ks_statistic_with_table(const std::vector<double>& sorted,
                                      const std::vector<double>& cdf_at) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    d = std::max(d, std::fabs(static_cast<double>(j + 1) / n - cdf_at[i]));
    i = j + 1;
  }
  return d;
}

}  // namespace detail

// AC-1: branching transition law at (x, t, gamma) = (1, 1, 1).
inline AcceptanceOutcome acceptance_feller_law(std::uint64_t seed,
                                               int threads) {
  AcceptanceOutcome out{"AC-1 feller-transition-law"};
  StopWatch watch;
  const std::size_t n = 1'000'000;
  const auto zero = monte_carlo(
      seed, 0, n, threads, [&](RngStream& rng, std::size_t) {
        return feller_transition(1.0, 1.0, FellerParams{1.0}, rng) == 0.0
                   ? 1.0
                   : 0.0;
      });
  auto zero_row =
      make_bound_row("AC-1", "extinction-frequency-vs-exp(-2)",
                     std::fabs(zero.mean - 0.1353352832366127), 0.00103);
  zero_row.estimate_a = zero.mean;
  zero_row.estimate_b = 0.1353352832366127;
  out.report.rows.push_back(zero_row);
  int k = 1;
  for (double lambda : {0.5, 1.0, 2.0}) {
    const auto est = monte_carlo(
        seed, std::uint64_t(k++) << 32, n, threads,
        [&](RngStream& rng, std::size_t) {
          return std::exp(-lambda *
                          feller_transition(1.0, 1.0, FellerParams{1.0}, rng));
        });
    out.report.rows.push_back(
        make_z_row("AC-1", "laplace-at-" + std::to_string(lambda), est,
                   feller_laplace(lambda, 1.0, 1.0, 1.0), 3.0));
  }
  out.seconds = watch.seconds();
  out.pass = out.report.all_pass();
  return out;
}

// AC-2: lattice array duality at m=2, n=2, p=0.7, t=0.5, x=(0,2),
// y=(-1/2, 3/2), one million replicates per side, cells against the
// uniformization oracle.
inline AcceptanceOutcome acceptance_lattice_duality(std::uint64_t seed,
                                                    int threads) {
  AcceptanceOutcome out{"AC-2 lattice-array-duality"};
  StopWatch watch;
  json params;
  params["p"] = 0.7;
  params["t"] = 0.5;
  params["x"] = {0.0, 2.0};
  params["y"] = {-0.5, 1.5};
  RunOptions opt;
  opt.seed = seed;
  opt.replicates = 1'000'000;
  opt.threads = threads;
  out.report = run_duality_lattice(params, opt);
  for (auto& row : out.report.rows) row.experiment = "AC-2";
  out.seconds = watch.seconds();
  out.pass = out.report.all_pass();
  return out;
}

// AC-3: generator identity sweep, m <= 3, n <= 3, positions in [-3, 3],
// every interval partition, 50 random array functions per configuration,
// p in {0.3, 0.5, 0.9}.
inline AcceptanceOutcome acceptance_generator_identity(std::uint64_t seed,
                                                       int threads) {
  (void)threads;
  AcceptanceOutcome out{"AC-3 generator-identity-sweep"};
  StopWatch watch;

  // Enumerate all states on a lattice window: every interval partition of
  // size m (split mask over the m-1 gaps), every strictly increasing choice
  // of block positions from `values`.
  auto enumerate_states = [](int m, const std::vector<double>& values,
                             double offset) {
    std::vector<LatticeState> states;
    for (unsigned split = 0; split < (1u << (m - 1)); ++split) {
      std::vector<std::size_t> ends;
      for (int i = 0; i < m - 1; ++i)
        if (split & (1u << i)) ends.push_back(i + 1);
      ends.push_back(m);
      const auto partition = IntervalPartition::from_block_ends(ends);
      const std::size_t h = partition.block_count();
      std::vector<std::size_t> idx(h);
      for (std::size_t i = 0; i < h; ++i) idx[i] = i;
      for (;;) {
        std::vector<double> pos(h);
        for (std::size_t i = 0; i < h; ++i) pos[i] = values[idx[i]];
        states.push_back(make_lattice_state(pos, partition, offset));
        // next increasing index tuple
        std::size_t i = h;
        while (i > 0) {
          --i;
          if (idx[i] + (h - i) < values.size()) {
            ++idx[i];
            for (std::size_t j = i + 1; j < h; ++j) idx[j] = idx[j - 1] + 1;
            break;
          }
          if (i == 0) {
            i = h + 1;
            break;
          }
        }
        if (i == h + 1 || h == 0) break;
      }
    }
    return states;
  };

  const std::vector<double> x_values{-3, -2, -1, 0, 1, 2, 3};
  const std::vector<double> y_values{-2.5, -1.5, -0.5, 0.5, 1.5, 2.5};
  double max_gap = 0.0;
  std::size_t checked = 0;
  RngStream g_rng(seed, std::uint64_t{3} << 40);
  for (int m = 1; m <= 3; ++m) {
    const auto x_states = enumerate_states(m, x_values, 0.0);
    for (int n = 1; n <= 3; ++n) {
      const auto y_states = enumerate_states(n, y_values, 0.5);
      const std::size_t bits = static_cast<std::size_t>(m) * (n - 1);
      std::vector<double> table(std::size_t{1} << bits);
      for (const auto& xs : x_states) {
        for (const auto& ys : y_states) {
          for (double p : {0.3, 0.5, 0.9}) {
            for (int rep = 0; rep < 50; ++rep) {
              for (auto& v : table) v = g_rng.uniform01();
              const double gap = generator_duality_gap(
                  xs, ys, p,
                  [&](std::uint64_t mask) { return table[mask]; });
              max_gap = std::max(max_gap, gap);
              ++checked;
            }
          }
        }
      }
    }
  }
  auto row = make_bound_row("AC-3", "max-generator-gap", max_gap, 1e-12);
  row.estimate_b = static_cast<double>(checked);
  out.report.rows.push_back(row);
  out.seconds = watch.seconds();
  out.pass = out.report.all_pass();
  return out;
}

// AC-4: continuum duality at m=1, n=2: P{X_1(1) in ]-1, 1]} analytic vs
// the backward dual pair.
inline AcceptanceOutcome acceptance_continuum_duality(std::uint64_t seed,
                                                      int threads) {
  AcceptanceOutcome out{"AC-4 continuum-duality"};
  StopWatch watch;
  const std::size_t n = 1'000'000;
  const double analytic = normal_cdf(1.0) - normal_cdf(-1.0);
  const auto backward = monte_carlo(
      seed, 0, n, threads, [&](RngStream& rng, std::size_t) {
        const auto pair = coalescing_pair_exact(-1.0, 1.0, 1.0, rng);
        return (0.0 > pair.y1 && 0.0 <= pair.y2) ? 1.0 : 0.0;
      });
  out.report.rows.push_back(
      make_z_row("AC-4", "backward-vs-analytic", backward, analytic, 3.0));
  out.seconds = watch.seconds();
  out.pass = out.report.all_pass();
  return out;
}

// AC-5: interval Laplace identity, forward (m=64 particles) vs dual, at a
// point initial mass; single interval and a two-interval union.
inline AcceptanceOutcome acceptance_laplace_identity(std::uint64_t seed,
                                                     int threads) {
  AcceptanceOutcome out{"AC-5 laplace-functional-identity"};
  StopWatch watch;
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  const std::size_t n = 100'000;
  {
    IntervalUnion u;
    u.endpoints = {-1.0, 1.0};
    u.weights = {1.0};
    const auto lhs =
        laplace_lhs_mc(z0, 64, 1.0, 1.0, u, 1e-3, n, seed, 0, threads);
    const auto rhs = laplace_rhs_mc(z0, 1.0, 1.0, u, 1e-3, n, seed,
                                    std::uint64_t{1} << 32, threads);
    out.report.rows.push_back(
        make_z_row("AC-5", "single-interval", lhs, rhs, 3.0));
  }
  {
    IntervalUnion u;
    u.endpoints = {-1.0, -0.25, 0.25, 1.0};
    u.weights = {1.0, 2.0};
    const auto lhs = laplace_lhs_mc(z0, 64, 1.0, 1.0, u, 1e-3, n, seed,
                                    std::uint64_t{2} << 32, threads);
    const auto rhs = laplace_rhs_mc(z0, 1.0, 1.0, u, 1e-3, n, seed,
                                    std::uint64_t{3} << 32, threads);
    out.report.rows.push_back(
        make_z_row("AC-5", "two-intervals", lhs, rhs, 3.0));
  }
  out.seconds = watch.seconds();
  out.pass = out.report.all_pass();
  return out;
}

// AC-6: interval emptiness quadrature against the exact-pair dual MC and
// the direct particle simulation.
inline AcceptanceOutcome acceptance_interval_empty(std::uint64_t seed,
                                                   int threads) {
  AcceptanceOutcome out{"AC-6 interval-emptiness"};
  StopWatch watch;
  const auto z0 = InitialMeasure::atoms({{-0.5, 0.6}, {0.5, 0.4}});
  const double quad = prob_interval_empty(z0, -1.0, 1.0, 1.0, 1.0);
  const auto dual_mc = prob_interval_empty_mc(z0, -1.0, 1.0, 1.0, 1.0,
                                              1'000'000, seed, 0, threads);
  out.report.rows.push_back(
      make_z_row("AC-6", "quadrature-vs-pair-dual", dual_mc, quad, 3.0));

  const int m = 200;
  const auto direct = monte_carlo(
      seed, std::uint64_t{1} << 32, 100'000, threads,
      [&](RngStream& rng, std::size_t) {
        const auto z = simulate_zm(z0, m, 1.0, 1.0, 1e-3, rng);
        return z.interval_mass(-1.0, 1.0) == 0.0 ? 1.0 : 0.0;
      });
  // finite-m (0.5/m) and step (1e-3) allowances on top of 3 sigma
  ComparisonRow row;
  row.experiment = "AC-6";
  row.comparison = "quadrature-vs-direct-simulation";
  row.estimate_a = direct.mean;
  row.se_a = direct.std_error;
  row.estimate_b = quad;
  row.statistic = std::fabs(direct.mean - quad);
  row.threshold = 3.0 * direct.std_error + 0.5 / m + 1e-3;
  row.kind = ComparisonRow::Kind::kUpperBound;
  row.pass = row.statistic <= row.threshold;
  out.report.rows.push_back(row);
  out.seconds = watch.seconds();
  out.pass = out.report.all_pass();
  return out;
}

// AC-7: expected support count quadrature vs direct simulation.
inline AcceptanceOutcome acceptance_support_count(std::uint64_t seed,
                                                  int threads) {
  AcceptanceOutcome out{"AC-7 expected-support-count"};
  StopWatch watch;
  const auto z0 = InitialMeasure::atoms({{-0.5, 0.6}, {0.5, 0.4}});
  const double quad = expected_support_count(z0, -1.0, 1.0, 1.0, 1.0);
  const auto direct = monte_carlo(
      seed, 0, 10'000, threads, [&](RngStream& rng, std::size_t) {
        const auto z = simulate_zm(z0, 200, 1.0, 1.0, 1e-3, rng);
        return static_cast<double>(z.support_count_in(-1.0, 1.0));
      });
  out.report.rows.push_back(
      make_z_row("AC-7", "direct-vs-quadrature", direct, quad, 3.0));
  out.seconds = watch.seconds();
  out.pass = out.report.all_pass();
  return out;
}

// AC-8: flow-skeleton construction vs the direct particle system, Laplace
// functional on ]0, 1]; main run plus a refinement run with both the grid
// and the step halved (|z| <= 4 with the documented grid/step allowance).
inline AcceptanceOutcome acceptance_flow_construction(std::uint64_t seed,
                                                      int threads) {
  AcceptanceOutcome out{"AC-8 flow-construction"};
  StopWatch watch;
  const auto z0 = InitialMeasure::piecewise_uniform({0.0, 1.0}, {1.0});
  const double t = 0.5, gamma = 1.0;
  const std::size_t n = 100'000;
  int part = 0;
  for (const auto& [level, step, tag] :
       {std::tuple<int, double, const char*>{6, 5e-4, "level6"},
        std::tuple<int, double, const char*>{7, 2.5e-4, "level7-refined"}}) {
    const auto flow_side = monte_carlo(
        seed, std::uint64_t(part) << 33, n, threads,
        [&](RngStream& rng, std::size_t) {
          const auto grid = flow_grid(level, -0.5, 1.5, t, step, rng);
          const auto z = flow_construct_zt(z0, gamma, t, grid, rng);
          return std::exp(-z.interval_mass(0.0, 1.0));
        });
    IntervalUnion u;
    u.endpoints = {0.0, 1.0};
    u.weights = {1.0};
    const auto direct =
        laplace_lhs_mc(z0, 200, gamma, t, u, step, n, seed,
                       (std::uint64_t(part) << 33) + (std::uint64_t{1} << 32),
                       threads);
    out.report.rows.push_back(make_z_row(
        "AC-8", std::string("flow-vs-direct-") + tag, flow_side, direct, 4.0));
    ++part;
  }
  out.seconds = watch.seconds();
  out.pass = out.report.all_pass();
  return out;
}

// AC-9: mass-dimension duality: finite-m identity at m in {8, 64} and the
// high-density limit formula at m = 200.
inline AcceptanceOutcome acceptance_mass_dimension(std::uint64_t seed,
                                                   int threads) {
  AcceptanceOutcome out{"AC-9 mass-dimension-duality"};
  StopWatch watch;
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  const DimensionSpec dim{InitialMeasure::atoms({{2.0, 1.0}})};
  IntervalUnion u;
  u.endpoints = {-1.0, 1.0};
  u.weights = {1.0};
  u.weights_b = {1.0};
  const std::size_t n = 100'000;
  int k = 0;
  for (int m : {8, 64}) {
    const auto rep = besq_duality_check(z0, dim, m, 1.0, u, 1e-3, n,
                                        seed + (k++), 0, threads);
    out.report.rows.push_back(make_z_row("AC-9",
                                         "forward-vs-dual-m" +
                                             std::to_string(m),
                                         rep.forward, rep.dual, 3.0));
  }
  const auto rep = besq_duality_check(z0, dim, 200, 1.0, u, 1e-3, n,
                                      seed + 50, 0, threads);
  out.report.rows.push_back(
      make_z_row("AC-9", "forward-vs-limit-m200", rep.forward, rep.limit,
                 3.0));
  out.seconds = watch.seconds();
  out.pass = out.report.all_pass();
  return out;
}

// AC-10: extinction-time law on a fine grid and the last-location law via
// a geometric grid run to extinction, KS against the closed-form CDF.
inline AcceptanceOutcome acceptance_extinction_and_location(
    std::uint64_t seed, int threads) {
  AcceptanceOutcome out{"AC-10 extinction-time-and-last-location"};
  StopWatch watch;
  const auto z0 = InitialMeasure::atoms({{0.0, 1.0}});
  const double gamma = 1.0;
  const int m = 8;
  {
    std::vector<double> grid(200);
    for (int k = 0; k < 200; ++k) grid[k] = (k + 1) / 200.0;
    const auto extinct = monte_carlo(
        seed, 0, 100'000, threads, [&](RngStream& rng, std::size_t) {
          return simulate_path(z0, m, gamma, grid, 1.0 / 200.0, rng, false)
                         .extinct
                     ? 1.0
                     : 0.0;
        });
    out.report.rows.push_back(make_z_row("AC-10", "extinction-by-1",
                                         extinct, std::exp(-2.0), 3.0));
  }
  {
    const auto grid = detail::geometric_grid(0.02, 1.01, 20'000.0);
    const std::size_t n = 100'000;
    std::vector<double> locations(n);
    std::vector<double> censored_flags = run_replicates(
        seed, std::uint64_t{1} << 32, n, threads,
        [&](RngStream& rng, std::size_t idx) {
          const auto obs = simulate_path(z0, m, gamma, grid, 1e9, rng, false);
          locations[idx] = obs.last_location;
          return obs.extinct ? 0.0 : 1.0;
        });
    std::vector<double> samples;
    samples.reserve(n);
    double censored = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (censored_flags[i] == 0.0)
        samples.push_back(locations[i]);
      else
        censored += 1.0;
    }
    out.report.rows.push_back(make_bound_row(
        "AC-10", "censored-path-fraction", censored / n, 0.001));
    std::sort(samples.begin(), samples.end());
    // closed-form CDF at every sample point, replicate-parallel
    std::vector<double> cdf_at(samples.size());
    {
      std::atomic<std::size_t> next{0};
      auto worker = [&]() {
        for (;;) {
          const std::size_t begin = next.fetch_add(1024);
          if (begin >= samples.size()) return;
          const std::size_t end = std::min(samples.size(), begin + 1024);
          for (std::size_t i = begin; i < end; ++i)
            cdf_at[i] = last_location_cdf(z0, gamma, samples[i]);
        }
      };
      std::vector<std::thread> pool;
      for (int t2 = 0; t2 < threads; ++t2) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    const double d = detail::ks_statistic_with_table(samples, cdf_at);
    const double sqrt_n = std::sqrt(static_cast<double>(samples.size()));
    const double p =
        kolmogorov_tail((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
    out.report.rows.push_back(
        make_p_row("AC-10", "last-location-ks", d, p, 0.001));
  }
  out.seconds = watch.seconds();
  out.pass = out.report.all_pass();
  return out;
}

/// Runs the whole acceptance suite, printing one line per criterion.
inline std::vector<AcceptanceOutcome> run_acceptance_suite(std::uint64_t seed,
                                                           int threads,
                                                           std::ostream& log) {
  std::vector<AcceptanceOutcome> outcomes;
  outcomes.push_back(acceptance_feller_law(seed, threads));
  outcomes.push_back(acceptance_lattice_duality(seed + 1, threads));
  outcomes.push_back(acceptance_generator_identity(seed + 2, threads));
  outcomes.push_back(acceptance_continuum_duality(seed + 3, threads));
  outcomes.push_back(acceptance_laplace_identity(seed + 4, threads));
  outcomes.push_back(acceptance_interval_empty(seed + 5, threads));
  outcomes.push_back(acceptance_support_count(seed + 6, threads));
  outcomes.push_back(acceptance_flow_construction(seed + 7, threads));
  outcomes.push_back(acceptance_mass_dimension(seed + 8, threads));
  outcomes.push_back(acceptance_extinction_and_location(seed + 9, threads));
  for (auto& o : outcomes) {
    log << (o.pass ? "PASS " : "FAIL ") << o.name << "  ("
        << o.report.rows.size() << " comparisons, " << o.seconds << " s)\n";
    if (!o.pass) {
      for (const auto& r : o.report.rows)
        if (!r.pass)
          log << "   failed: " << r.comparison << "  statistic="
              << r.statistic << " threshold=" << r.threshold << "\n";
    }
  }
  return outcomes;
}

inline TestReport acceptance_report(
    const std::vector<AcceptanceOutcome>& outcomes) {
  TestReport report;
  for (const auto& o : outcomes) {
    for (auto row : o.report.rows) {
      row.seconds = o.seconds;
      report.rows.push_back(row);
    }
  }
  return report;
}

}  // namespace coalsim
