// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coalsim/besq_model.hpp"
#include "coalsim/brownian.hpp"
#include "coalsim/closedform.hpp"
#include "coalsim/lattice.hpp"
#include "coalsim/lattice_oracle.hpp"
#include "coalsim/measures.hpp"
#include "coalsim/scsm.hpp"
#include "coalsim/stats.hpp"
#include "json.hpp"

namespace coalsim {

/// One pass/fail comparison.  `statistic` is a z-score (pass when |z| <=
/// threshold) or a p-value (pass when p >= threshold), per `kind`.
struct ComparisonRow {
  enum class Kind { kZScore, kPValue, kUpperBound };  // bound: stat <= thr
  std::string experiment;
  std::string comparison;
  double estimate_a = 0.0;
  double se_a = 0.0;
  double estimate_b = 0.0;
  double se_b = 0.0;
  double statistic = 0.0;
  double threshold = 0.0;
  Kind kind = Kind::kZScore;
  bool pass = false;
  double seconds = 0.0;
};

inline ComparisonRow make_z_row(std::string experiment, std::string comparison,
                                const MCEstimate& a, const MCEstimate& b,
                                double threshold) {
  ComparisonRow row;
  row.experiment = std::move(experiment);
  row.comparison = std::move(comparison);
  row.estimate_a = a.mean;
  row.se_a = a.std_error;
  row.estimate_b = b.mean;
  row.se_b = b.std_error;
  row.statistic = two_sample_z(a, b);
  row.threshold = threshold;
  row.kind = ComparisonRow::Kind::kZScore;
  row.pass = std::fabs(row.statistic) <= threshold;
  return row;
}

inline ComparisonRow make_z_row(std::string experiment, std::string comparison,
                                const MCEstimate& a, double reference,
                                double threshold) {
  return make_z_row(std::move(experiment), std::move(comparison), a,
                    MCEstimate{reference, 0.0, 1, 0, 0}, threshold);
}

inline ComparisonRow make_p_row(std::string experiment, std::string comparison,
                                double statistic_value, double p_value,
                                double significance) {
  ComparisonRow row;
  row.experiment = std::move(experiment);
  row.comparison = std::move(comparison);
  row.estimate_a = statistic_value;
  row.statistic = p_value;
  row.threshold = significance;
  row.kind = ComparisonRow::Kind::kPValue;
  row.pass = p_value >= significance;
  return row;
}

inline ComparisonRow make_bound_row(std::string experiment,
                                    std::string comparison, double value,
                                    double bound) {
  ComparisonRow row;
  row.experiment = std::move(experiment);
  row.comparison = std::move(comparison);
  row.estimate_a = value;
  row.statistic = value;
  row.threshold = bound;
  row.kind = ComparisonRow::Kind::kUpperBound;
  row.pass = value <= bound;
  return row;
}

struct TestReport {
  std::vector<ComparisonRow> rows;
  bool all_pass() const {
    for (const auto& r : rows)
      if (!r.pass) return false;
    return true;
  }
};

class StopWatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(clock::now() - start_).count();
  }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point start_ = clock::now();
};

// ---------------------------------------------------------------------------
// Config parsing

using json = nlohmann::json;

inline double require_positive(const json& j, const std::string& key) {
  if (!j.contains(key))
    throw std::invalid_argument(key + ": missing required field");
  const double v = j.at(key).get<double>();
  if (!(v > 0.0))
    throw std::invalid_argument(key + ": must be positive");
  return v;
}

inline double require_number(const json& j, const std::string& key) {
  if (!j.contains(key))
    throw std::invalid_argument(key + ": missing required field");
  return j.at(key).get<double>();
}

/// {"atoms": [[loc, mass], ...]} or
/// {"piecewise": {"breaks": [...], "weights": [...]}}
inline InitialMeasure measure_from_json(const json& j,
                                        const std::string& key) {
  if (!j.contains(key))
    throw std::invalid_argument(key + ": missing required field");
  const json& spec = j.at(key);
  if (spec.contains("atoms")) {
    std::vector<std::pair<double, double>> atoms;
    for (const auto& pair : spec.at("atoms")) {
      if (!pair.is_array() || pair.size() != 2)
        throw std::invalid_argument(key + ".atoms: need [location, mass]");
      atoms.emplace_back(pair[0].get<double>(), pair[1].get<double>());
    }
    return InitialMeasure::atoms(std::move(atoms));
  }
  if (spec.contains("piecewise")) {
    const json& pw = spec.at("piecewise");
    return InitialMeasure::piecewise_uniform(
        pw.at("breaks").get<std::vector<double>>(),
        pw.at("weights").get<std::vector<double>>());
  }
  throw std::invalid_argument(key + ": need \"atoms\" or \"piecewise\"");
}

/// {"endpoints": [...2n...], "weights": [...n...], "weights_b": optional}
inline IntervalUnion interval_union_from_json(const json& j,
                                              const std::string& key) {
  if (!j.contains(key))
    throw std::invalid_argument(key + ": missing required field");
  const json& spec = j.at(key);
  IntervalUnion u;
  u.endpoints = spec.at("endpoints").get<std::vector<double>>();
  u.weights = spec.at("weights").get<std::vector<double>>();
  if (spec.contains("weights_b"))
    u.weights_b = spec.at("weights_b").get<std::vector<double>>();
  u.validate();
  return u;
}

struct RunOptions {
  std::uint64_t seed = 12345;
  std::size_t replicates = 0;  // 0: use the experiment's default
  int threads = 1;
  std::string out_dir;

  std::size_t reps_or(std::size_t fallback) const {
    return replicates == 0 ? fallback : replicates;
  }
};

// ---------------------------------------------------------------------------
// Experiments

/// Elementary transition samplers against their transforms.
inline TestReport run_sample(const json& params, const RunOptions& opt) {
  TestReport report;
  const std::string law = params.at("law").get<std::string>();
  const double x = require_number(params, "x");
  const double t = require_positive(params, "t");
  const std::size_t n = opt.reps_or(1'000'000);
  std::vector<double> lambdas{0.5, 1.0, 2.0};
  if (params.contains("lambdas"))
    lambdas = params.at("lambdas").get<std::vector<double>>();
  StopWatch watch;
  if (law == "feller") {
    const double gamma = require_positive(params, "gamma");
    const auto zero = monte_carlo(
        opt.seed, 0, n, opt.threads, [&](RngStream& rng, std::size_t) {
          return feller_transition(x, t, FellerParams{gamma}, rng) == 0.0
                     ? 1.0
                     : 0.0;
        });
    auto row = make_z_row("sample", "extinction-probability", zero,
                          feller_extinction_probability(x, t, gamma), 3.0);
    row.seconds = watch.seconds();
    report.rows.push_back(row);
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      const double lambda = lambdas[k];
      StopWatch w2;
      const auto est = monte_carlo(
          opt.seed, (k + 1) << 32, n, opt.threads,
          [&](RngStream& rng, std::size_t) {
            return std::exp(-lambda *
                            feller_transition(x, t, FellerParams{gamma}, rng));
          });
      auto lrow = make_z_row("sample",
                             "laplace-lambda-" + std::to_string(lambda), est,
                             feller_laplace(lambda, x, t, gamma), 3.0);
      lrow.seconds = w2.seconds();
      report.rows.push_back(lrow);
    }
  } else if (law == "besq") {
    const double delta = require_number(params, "delta");
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      const double lambda = lambdas[k];
      StopWatch w2;
      const auto est = monte_carlo(
          opt.seed, (k + 1) << 32, n, opt.threads,
          [&](RngStream& rng, std::size_t) {
            return std::exp(-lambda *
                            besq_transition(x, t, BesqParams{delta}, rng));
          });
      auto lrow = make_z_row("sample",
                             "laplace-lambda-" + std::to_string(lambda), est,
                             besq_laplace(lambda, x, t, delta), 3.0);
      lrow.seconds = w2.seconds();
      report.rows.push_back(lrow);
    }
  } else {
    throw std::invalid_argument("law: must be \"feller\" or \"besq\"");
  }
  return report;
}

/// Forward and backward coalescing-walk array laws against each other and
/// against the uniformization oracle.
inline TestReport run_duality_lattice(const json& params,
                                      const RunOptions& opt) {
  const double p = require_number(params, "p");
  const double t = require_positive(params, "t");
  const auto x = params.at("x").get<std::vector<double>>();
  const auto y = params.at("y").get<std::vector<double>>();
  const std::size_t n = opt.reps_or(1'000'000);
  const int radius = params.value("truncation_radius", 40);
  const int cap = params.value("jump_cap", 40);

  const auto x_state =
      make_lattice_state(x, IntervalPartition::singletons(x.size()));
  const auto y_state =
      make_lattice_state(y, IntervalPartition::singletons(y.size()), 0.5);
  const std::size_t cells =
      std::size_t{1} << (x.size() * (y.size() - 1));

  StopWatch watch;
  std::vector<double> fwd(cells, 0.0), bwd(cells, 0.0);
  {
    const auto masks = run_replicates(
        opt.seed, 0, n, opt.threads, [&](RngStream& rng, std::size_t) {
          const auto out = simulate_coalescing_walk(x_state, p, t, rng);
          return static_cast<double>(indicator_forward(out, y).bitmask());
        });
    for (double m : masks) fwd[static_cast<std::size_t>(m)] += 1.0;
  }
  {
    const auto masks = run_replicates(
        opt.seed, std::uint64_t{1} << 32, n, opt.threads,
        [&](RngStream& rng, std::size_t) {
          const auto out = simulate_coalescing_walk(y_state, 1.0 - p, t, rng);
          return static_cast<double>(indicator_backward(x, out).bitmask());
        });
    for (double m : masks) bwd[static_cast<std::size_t>(m)] += 1.0;
  }
  const auto oracle = array_law_oracle(x_state, p, t, y, radius, cap, 1e-6);

  TestReport report;
  const auto chi = chi_square_two_sample(fwd, bwd);
  auto chi_row = make_p_row("duality-lattice", "forward-vs-backward-chi2",
                            chi.statistic, chi.p_value, 0.001);
  chi_row.seconds = watch.seconds();
  report.rows.push_back(chi_row);
  report.rows.push_back(make_bound_row("duality-lattice", "oracle-error-bound",
                                       oracle.error_bound, 1e-6));
  for (std::size_t mask = 0; mask < cells; ++mask) {
    for (const char* side : {"forward", "backward"}) {
      const double freq = (side[0] == 'f' ? fwd[mask] : bwd[mask]) /
                          static_cast<double>(n);
      ComparisonRow row;
      row.experiment = "duality-lattice";
      row.comparison =
          "cell-" + std::to_string(mask) + "-" + side + "-vs-oracle";
      row.estimate_a = freq;
      row.estimate_b = oracle.probabilities[mask];
      row.statistic = std::fabs(freq - oracle.probabilities[mask]);
      row.threshold = 0.003;
      row.kind = ComparisonRow::Kind::kUpperBound;
      row.pass = row.statistic <= row.threshold;
      report.rows.push_back(row);
    }
  }
  return report;
}

/// Continuum balls-in-boxes duality: analytic one-walker law against the
/// backward dual pair, and the two-sided two-walker array comparison.
inline TestReport run_duality_bm(const json& params, const RunOptions& opt) {
  TestReport report;
  const double t = require_positive(params, "t");
  const std::size_t n = opt.reps_or(1'000'000);
  const std::string mode = params.value("mode", "point-in-pair");
  StopWatch watch;
  if (mode == "point-in-pair") {
    const double x1 = require_number(params, "x1");
    const double y1 = require_number(params, "y1");
    const double y2 = require_number(params, "y2");
    const double analytic = normal_cdf((y2 - x1) / std::sqrt(t)) -
                            normal_cdf((y1 - x1) / std::sqrt(t));
    const auto backward = monte_carlo(
        opt.seed, 0, n, opt.threads, [&](RngStream& rng, std::size_t) {
          const auto pair = coalescing_pair_exact(y1, y2, t, rng);
          return (x1 > pair.y1 && x1 <= pair.y2) ? 1.0 : 0.0;
        });
    auto row = make_z_row("duality-bm", "analytic-vs-backward", backward,
                          analytic, 3.0);
    row.seconds = watch.seconds();
    report.rows.push_back(row);
  } else if (mode == "two-sided") {
    const auto x = params.at("x").get<std::vector<double>>();
    const double y1 = require_number(params, "y1");
    const double y2 = require_number(params, "y2");
    const double step = params.value("step", 1e-3);
    std::vector<double> fwd(4, 0.0), bwd(4, 0.0);
    {
      const auto masks = run_replicates(
          opt.seed, 0, n, opt.threads, [&](RngStream& rng, std::size_t) {
            auto xs = x;
            const auto out = coalescing_bm(make_bm_state(xs), t, step, rng);
            std::uint64_t mask = 0;
            if (out.positions[0] > y1 && out.positions[0] <= y2) mask |= 1;
            if (out.positions[1] > y1 && out.positions[1] <= y2) mask |= 2;
            return static_cast<double>(mask);
          });
      for (double m : masks) fwd[static_cast<std::size_t>(m)] += 1.0;
    }
    {
      const auto masks = run_replicates(
          opt.seed, std::uint64_t{1} << 32, n, opt.threads,
          [&](RngStream& rng, std::size_t) {
            const auto pair = coalescing_pair_exact(y1, y2, t, rng);
            std::uint64_t mask = 0;
            if (x[0] > pair.y1 && x[0] <= pair.y2) mask |= 1;
            if (x[1] > pair.y1 && x[1] <= pair.y2) mask |= 2;
            return static_cast<double>(mask);
          });
      for (double m : masks) bwd[static_cast<std::size_t>(m)] += 1.0;
    }
    const auto chi = chi_square_two_sample(fwd, bwd);
    auto row = make_p_row("duality-bm", "two-sided-chi2", chi.statistic,
                          chi.p_value, 0.001);
    row.seconds = watch.seconds();
    report.rows.push_back(row);
  } else {
    throw std::invalid_argument("mode: unknown duality-bm mode");
  }
  return report;
}

/// Both sides of the interval Laplace functional identity.
inline TestReport run_scsm_laplace(const json& params, const RunOptions& opt) {
  const auto z0 = measure_from_json(params, "z0");
  const auto u = interval_union_from_json(params, "intervals");
  const double gamma = require_positive(params, "gamma");
  const double t = require_positive(params, "t");
  const int m = params.value("m", 64);
  const double step = params.value("step", 1e-3);
  const std::size_t n = opt.reps_or(100'000);
  if (m <= 0) throw std::invalid_argument("m: must be positive");

  StopWatch watch;
  const auto lhs = laplace_lhs_mc(z0, m, gamma, t, u, step, n, opt.seed, 0,
                                  opt.threads);
  const auto rhs = laplace_rhs_mc(z0, gamma, t, u, step, n, opt.seed,
                                  std::uint64_t{1} << 32, opt.threads);
  TestReport report;
  auto row = make_z_row("scsm-laplace", "forward-vs-dual", lhs, rhs, 3.0);
  row.seconds = watch.seconds();
  report.rows.push_back(row);
  return report;
}

inline TestReport run_moments(const json& params, const RunOptions& opt) {
  const auto z0 = measure_from_json(params, "z0");
  const auto u = interval_union_from_json(params, "intervals");
  const double gamma = require_positive(params, "gamma");
  const double t = require_positive(params, "t");
  const int m = params.value("m", 64);
  const double step = params.value("step", 1e-3);
  const std::size_t n = opt.reps_or(100'000);
  StopWatch watch;
  const auto rep =
      moment_check(z0, m, gamma, t, u, step, n, opt.seed, 0, opt.threads);
  TestReport report;
  auto r1 = make_z_row("moments", "first-moment", rep.first_lhs, rep.first_rhs,
                       3.0);
  r1.seconds = watch.seconds();
  report.rows.push_back(r1);
  report.rows.push_back(make_z_row("moments", "second-moment", rep.second_lhs,
                                   rep.second_rhs, 3.0));
  return report;
}

/// Closed-form evaluations with optional paired Monte Carlo oracles.
inline TestReport run_closed_form(const json& params, const RunOptions& opt) {
  const std::string formula = params.at("formula").get<std::string>();
  const bool with_oracle = params.value("oracle", false);
  const std::size_t n = opt.reps_or(1'000'000);
  QuadratureSpec spec;
  spec.rel_tol = params.value("rel_tol", 1e-8);

  TestReport report;
  StopWatch watch;
  ComparisonRow row;
  row.experiment = "closed-form";
  row.comparison = formula;
  row.kind = ComparisonRow::Kind::kUpperBound;

  auto finish_value_only = [&](double value) {
    row.estimate_a = value;
    row.statistic = 0.0;
    row.threshold = 0.0;
    row.pass = true;
  };
  auto finish_with_oracle = [&](double value, const MCEstimate& mc,
                                double extra_allowance) {
    row.estimate_a = value;
    row.estimate_b = mc.mean;
    row.se_b = mc.std_error;
    row.statistic = std::fabs(value - mc.mean);
    row.threshold = 4.0 * mc.std_error + extra_allowance;
    row.pass = row.statistic <= row.threshold;
  };

  if (formula == "extinction-time") {
    finish_value_only(extinction_time_cdf(require_positive(params, "zbar"),
                                          require_positive(params, "gamma"),
                                          require_positive(params, "t")));
  } else if (formula == "interval-empty") {
    const auto z0 = measure_from_json(params, "z0");
    const double a = require_number(params, "a"), b = require_number(params, "b");
    const double t = require_positive(params, "t");
    const double gamma = require_positive(params, "gamma");
    const double value = prob_interval_empty(z0, a, b, t, gamma, spec);
    if (with_oracle)
      finish_with_oracle(value, prob_interval_empty_mc(z0, a, b, t, gamma, n,
                                                       opt.seed, 0,
                                                       opt.threads),
                         0.0);
    else
      finish_value_only(value);
  } else if (formula == "support-count") {
    const auto z0 = measure_from_json(params, "z0");
    const double a = require_number(params, "a"), b = require_number(params, "b");
    const double t = require_positive(params, "t");
    const double gamma = require_positive(params, "gamma");
    const double value = expected_support_count(z0, a, b, t, gamma, spec);
    if (with_oracle)
      finish_with_oracle(value,
                         expected_support_count_mc(z0, a, b, t, gamma, n,
                                                   opt.seed, 0, opt.threads),
                         0.0);
    else
      finish_value_only(value);
  } else if (formula == "point-mass-laplace") {
    const auto z0 = measure_from_json(params, "z0");
    const double a = require_number(params, "a"), b = require_number(params, "b");
    const double t = require_positive(params, "t");
    const double gamma = require_positive(params, "gamma");
    const double lambda = require_number(params, "lambda");
    const double value =
        point_mass_laplace_interval(z0, a, b, t, gamma, lambda, spec);
    if (with_oracle)
      finish_with_oracle(value, point_mass_laplace_interval_mc(
                                    z0, a, b, t, gamma, lambda, n, opt.seed, 0,
                                    opt.threads),
                         0.0);
    else
      finish_value_only(value);
  } else if (formula == "survivor-range") {
    const auto z0 = measure_from_json(params, "z0");
    const double a = require_number(params, "a"), b = require_number(params, "b");
    const double t = require_positive(params, "t");
    const double gamma = require_positive(params, "gamma");
    const double lambda = params.value("lambda", 0.0);
    const auto boundary = params.value("printed_boundary", true)
                              ? RangeBoundaryTerm::kAsPrinted
                              : RangeBoundaryTerm::kTotalMass;
    const double value =
        last_particle_range(z0, a, b, t, gamma, lambda, spec, boundary);
    if (with_oracle)
      finish_with_oracle(value, last_particle_range_mc(z0, a, b, t, gamma,
                                                       lambda, n, opt.seed, 0,
                                                       opt.threads),
                         0.0);
    else
      finish_value_only(value);
  } else if (formula == "single-survivor-time") {
    const auto z0 = measure_from_json(params, "z0");
    const double t = require_positive(params, "t");
    const double gamma = require_positive(params, "gamma");
    const auto term = params.value("printed_tail", false)
                          ? SurvivorFinalTerm::kAsPrinted
                          : SurvivorFinalTerm::kExtinctionProbability;
    const double value = single_survivor_time_cdf(z0, t, gamma, spec, term);
    if (with_oracle)
      finish_with_oracle(value,
                         single_survivor_time_mc(z0, t, gamma, n, opt.seed, 0,
                                                 opt.threads),
                         0.0);
    else
      finish_value_only(value);
  } else if (formula == "last-location") {
    const auto z0 = measure_from_json(params, "z0");
    const double gamma = require_positive(params, "gamma");
    const double z = require_number(params, "z");
    const double value = last_location_cdf(z0, gamma, z, spec);
    if (with_oracle)
      finish_with_oracle(value, last_location_cdf_mc(z0, gamma, z, n, opt.seed,
                                                     0, opt.threads),
                         0.0);
    else
      finish_value_only(value);
  } else if (formula == "occupation-zero") {
    const auto z0 = measure_from_json(params, "z0");
    const double a = require_number(params, "a"), b = require_number(params, "b");
    const double t = require_positive(params, "t");
    const double gamma = require_positive(params, "gamma");
    const double value = occupation_zero(z0, a, b, t, gamma, spec);
    if (with_oracle) {
      const int m = params.value("m", 64);
      const double step = params.value("step", 1e-3);
      finish_with_oracle(value,
                         occupation_zero_mc(z0, m, gamma, a, b, t, 200, step,
                                            opt.reps_or(20'000), opt.seed, 0,
                                            opt.threads),
                         0.01);
    } else {
      finish_value_only(value);
    }
  } else {
    throw std::invalid_argument("formula: unknown closed-form name");
  }
  row.seconds = watch.seconds();
  report.rows.push_back(row);
  return report;
}

/// Extinction-time law and last-location law from chained path simulation.
inline TestReport run_path_stats(const json& params, const RunOptions& opt) {
  const auto z0 = measure_from_json(params, "z0");
  const double gamma = require_positive(params, "gamma");
  const int m = params.value("m", 8);
  const double t_star = params.value("t", 1.0);
  const int grid_points = params.value("grid_points", 200);
  const std::size_t n = opt.reps_or(100'000);
  TestReport report;

  std::vector<double> grid(grid_points);
  for (int k = 0; k < grid_points; ++k)
    grid[k] = t_star * static_cast<double>(k + 1) / grid_points;
  StopWatch watch;
  const auto extinct = monte_carlo(
      opt.seed, 0, n, opt.threads, [&](RngStream& rng, std::size_t) {
        const auto obs =
            simulate_path(z0, m, gamma, grid, t_star / grid_points, rng,
                          false);
        return obs.extinct ? 1.0 : 0.0;
      });
  auto row = make_z_row("path-stats", "extinction-by-t", extinct,
                        extinction_time_cdf(z0.total_mass(), gamma, t_star),
                        3.0);
  row.seconds = watch.seconds();
  report.rows.push_back(row);
  return report;
}

/// Flow-skeleton transport against the direct particle construction.
inline TestReport run_flow_compare(const json& params, const RunOptions& opt) {
  const auto z0 = measure_from_json(params, "z0");
  const double gamma = require_positive(params, "gamma");
  const double t = require_positive(params, "t");
  const int level = params.value("level", 6);
  const double lo = require_number(params, "lo");
  const double hi = require_number(params, "hi");
  const double a = require_number(params, "a");
  const double b = require_number(params, "b");
  const double weight = params.value("weight", 1.0);
  const int m = params.value("m", 200);
  const double step = params.value("step", 1e-3 * t);
  const std::size_t n = opt.reps_or(100'000);
  const double threshold = params.value("z_threshold", 4.0);

  StopWatch watch;
  const auto flow_side = monte_carlo(
      opt.seed, 0, n, opt.threads, [&](RngStream& rng, std::size_t) {
        const auto grid = flow_grid(level, lo, hi, t, step, rng);
        const auto z = flow_construct_zt(z0, gamma, t, grid, rng);
        return std::exp(-weight * z.interval_mass(a, b));
      });
  IntervalUnion u;
  u.endpoints = {a, b};
  u.weights = {weight};
  const auto direct = laplace_lhs_mc(z0, m, gamma, t, u, step, n, opt.seed,
                                     std::uint64_t{1} << 32, opt.threads);
  TestReport report;
  auto row = make_z_row("flow-compare", "flow-vs-direct", flow_side, direct,
                        threshold);
  row.seconds = watch.seconds();
  report.rows.push_back(row);

  if (params.value("emit_grid", false) && !opt.out_dir.empty()) {
    std::filesystem::create_directories(opt.out_dir);
    RngStream rng(opt.seed, std::uint64_t{7} << 56);
    const auto grid = flow_grid(level, lo, hi, t, step, rng);
    std::ofstream out(std::filesystem::path(opt.out_dir) / "flowgrid.csv");
    out << "grid_point,image,block\n";
    std::size_t block = 0;
    for (double x = grid.lo; x <= grid.hi + 0.5 * grid.spacing;
         x += grid.spacing) {
      while (block + 1 < grid.images.size() &&
             x > grid.boundaries[block] + 0.25 * grid.spacing)
        ++block;
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%zu\n", x,
                    grid.images[block], block);
      out << buf;
    }
  }
  return report;
}

inline TestReport run_cox_avoidance(const json& params,
                                    const RunOptions& opt) {
  const auto z0 = measure_from_json(params, "z0");
  const auto u = interval_union_from_json(params, "intervals");
  const double gamma = require_positive(params, "gamma");
  const double t = require_positive(params, "t");
  const int m = params.value("m", 200);
  const double step = params.value("step", 1e-3);
  const std::size_t n = opt.reps_or(100'000);
  StopWatch watch;
  const auto rep = cox_avoidance_check(z0, m, gamma, t, u, step, n, opt.seed,
                                       0, opt.threads);
  TestReport report;
  auto row = make_z_row("cox-avoidance", "direct-vs-dual", rep.direct,
                        rep.dual, params.value("z_threshold", 3.5));
  row.seconds = watch.seconds();
  report.rows.push_back(row);
  return report;
}

inline TestReport run_besq_duality(const json& params, const RunOptions& opt) {
  const auto z0 = measure_from_json(params, "z0");
  const DimensionSpec dim{measure_from_json(params, "dimension")};
  const auto u = interval_union_from_json(params, "intervals");
  const double t = require_positive(params, "t");
  const double step = params.value("step", 1e-3);
  const std::size_t n = opt.reps_or(100'000);
  std::vector<int> finite_m{8, 64};
  if (params.contains("finite_m"))
    finite_m = params.at("finite_m").get<std::vector<int>>();
  const int limit_m = params.value("limit_m", 200);

  TestReport report;
  for (std::size_t k = 0; k < finite_m.size(); ++k) {
    StopWatch watch;
    const auto rep = besq_duality_check(z0, dim, finite_m[k], t, u, step, n,
                                        opt.seed + k, 0, opt.threads);
    auto row = make_z_row("besq-duality",
                          "forward-vs-dual-m" + std::to_string(finite_m[k]),
                          rep.forward, rep.dual, 3.0);
    row.seconds = watch.seconds();
    report.rows.push_back(row);
  }
  StopWatch watch;
  const auto rep = besq_duality_check(z0, dim, limit_m, t, u, step, n,
                                      opt.seed + 100, 0, opt.threads);
  auto row = make_z_row("besq-duality",
                        "forward-vs-limit-m" + std::to_string(limit_m),
                        rep.forward, rep.limit, 3.0);
  row.seconds = watch.seconds();
  report.rows.push_back(row);
  return report;
}

// ---------------------------------------------------------------------------
// Reports

inline std::string format_row(const ComparisonRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%s,%s,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%s,%.3f",
                r.experiment.c_str(), r.comparison.c_str(), r.estimate_a,
                r.se_a, r.estimate_b, r.se_b, r.statistic, r.threshold,
                r.pass ? "true" : "false", r.seconds);
  return buf;
}

inline std::string report_csv(const TestReport& report) {
  std::string out =
      "experiment,comparison,estimate_a,se_a,estimate_b,se_b,statistic,"
      "threshold,pass,seconds\n";
  for (const auto& r : report.rows) {
    out += format_row(r);
    out += '\n';
  }
  return out;
}

inline void write_report(const TestReport& report, const RunOptions& opt,
                         const std::string& kind) {
  if (opt.out_dir.empty()) return;
  std::filesystem::create_directories(opt.out_dir);
  {
    std::ofstream csv(std::filesystem::path(opt.out_dir) / "results.csv");
    csv << report_csv(report);
  }
  json summary;
  summary["experiment"] = kind;
  summary["seed"] = opt.seed;
  summary["threads"] = opt.threads;
  summary["version"] = "0.1.0";
  summary["pass"] = report.all_pass();
  json rows = json::array();
  for (const auto& r : report.rows) {
    json jr;
    jr["comparison"] = r.comparison;
    jr["pass"] = r.pass;
    jr["statistic"] = r.statistic;
    jr["threshold"] = r.threshold;
    rows.push_back(jr);
  }
  summary["comparisons"] = rows;
  std::ofstream js(std::filesystem::path(opt.out_dir) / "summary.json");
  js << summary.dump(2) << '\n';
}

/// Dispatch by experiment kind; unknown kinds throw.
inline TestReport run_experiment(const std::string& kind, const json& params,
                                 const RunOptions& opt) {
  TestReport report;
  if (kind == "sample")
    report = run_sample(params, opt);
  else if (kind == "duality-lattice")
    report = run_duality_lattice(params, opt);
  else if (kind == "duality-bm")
    report = run_duality_bm(params, opt);
  else if (kind == "scsm-laplace")
    report = run_scsm_laplace(params, opt);
  else if (kind == "moments")
    report = run_moments(params, opt);
  else if (kind == "closed-form")
    report = run_closed_form(params, opt);
  else if (kind == "path-stats")
    report = run_path_stats(params, opt);
  else if (kind == "flow-compare")
    report = run_flow_compare(params, opt);
  else if (kind == "cox-avoidance")
    report = run_cox_avoidance(params, opt);
  else if (kind == "besq-duality")
    report = run_besq_duality(params, opt);
  else
    throw std::invalid_argument("kind: unknown experiment \"" + kind + "\"");
  write_report(report, opt, kind);
  return report;
}

}  // namespace coalsim
