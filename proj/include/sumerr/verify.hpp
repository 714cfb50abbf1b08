// Copyright 2026 The sumerr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// End-to-end verification suites: identities, recurrences, constants,
// convergence orders, coverage and qualitative error trends. Each suite
// returns a pass/fail verdict with a one-line summary.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "sumerr/bounds.hpp"
#include "sumerr/comp_tree.hpp"
#include "sumerr/double_double.hpp"
#include "sumerr/experiment.hpp"
#include "sumerr/kernels.hpp"
#include "sumerr/oracles.hpp"
#include "sumerr/precision.hpp"

namespace sumerr {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 20260101;
  unsigned threads = 0;
  bool full_scale = false;            // include the n = 10^6 block-summation trend
  std::size_t trend_trials = 100;
  std::size_t large_fabsum_trials = 20;
  std::size_t coverage_trials = 1000;
};

namespace detail {

inline double uniform_in(RandomStream& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

inline std::size_t log_uniform_size(RandomStream& rng, std::size_t lo, std::size_t hi) {
  const double e = uniform_in(rng, std::log(static_cast<double>(lo)), std::log(static_cast<double>(hi)));
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(std::exp(e))), lo, hi);
}

/// Least-squares slope of log(y) against log(x).
inline double log_log_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t m = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

inline DoubleDouble dd_mul(const DoubleDouble& a, const DoubleDouble& b) { return a * b.hi() + a * b.lo(); }

inline DoubleDouble dd_div(const DoubleDouble& a, const DoubleDouble& b) {
  const double q1 = a.hi() / b.hi();
  const DoubleDouble r = a - dd_mul(b, DoubleDouble(q1));
  const double q2 = r.hi() / b.hi();
  return DoubleDouble(q1) + DoubleDouble(q2);
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace detail

/// alpha(u)^2 - 6 - 26u evaluated in double-double from the definition.
inline double alpha_squared_excess(double u) {
  const double a = 1.0 + u;
  const auto p = two_prod(a, a);
  const DoubleDouble a2(p.sum, p.err);
  const DoubleDouble a4 = detail::dd_mul(a2, a2);
  const DoubleDouble num = DoubleDouble(1.0) + a2 * 3.0 + a4 * 2.0;
  const DoubleDouble den = DoubleDouble(1.0) - a2 * u;
  const DoubleDouble alpha2 = detail::dd_div(num, detail::dd_mul(den, den));
  return (alpha2 - DoubleDouble(6.0) - DoubleDouble(26.0) * u).value();
}

inline SuiteResult identity_suite(std::uint64_t seed, std::size_t configs = 200) {
  RandomStream rng(seed);
  double worst = 0.0;
  std::size_t failures = 0;
  const int precisions[] = {8, 11, 24};
  for (std::size_t i = 0; i < configs; ++i) {
    const std::size_t n = detail::log_uniform_size(rng, 10, 10000);
    const Precision p(precisions[static_cast<std::size_t>(rng.uniform() * 3.0) % 3]);
    const RoundingMode mode = i % 2 == 0 ? RoundingMode::NearestTiesEven : RoundingMode::Stochastic;
    CompTree tree = i % 3 == 0 ? build_sequential(n, p) : i % 3 == 1 ? build_pairwise(n, p) : build_random(n, rng, p);
    const auto dist = i % 4 == 3 ? InputDistribution::normal(0.0, 1.0) : InputDistribution::uniform(0.0, 1.0);
    std::vector<double> x(n);
    for (auto& v : x) v = dist.sample(rng);
    RandomStream round_rng(mix_seed(seed + i));
    const auto run = run_tree_sum(tree, x, mode, &round_rng);
    const double scale = identity_scale(run);
    const double a = relative_deviation(error_via_local_products(run, tree), run.error, scale);
    const double b = relative_deviation(error_via_child_recurrence(run, tree).error, run.error, scale);
    worst = std::max({worst, a, b});
    if (a > 1e-10 || b > 1e-10) ++failures;
  }
  return {"exact-identity", failures == 0,
          std::to_string(configs) + " configurations, worst relative deviation " + detail::fmt(worst)};
}

inline SuiteResult compensated_recurrence_suite(std::uint64_t seed, std::size_t runs = 100) {
  RandomStream rng(seed);
  double worst = 0.0, worst_base = 0.0;
  std::size_t failures = 0;
  for (std::size_t i = 0; i < runs; ++i) {
    const std::size_t n = detail::log_uniform_size(rng, 3, 1000);
    const auto dist = i % 3 == 2 ? InputDistribution::normal(0.0, 1.0) : InputDistribution::uniform(0.0, 1.0);
    std::vector<double> x(n);
    for (auto& v : x) v = dist.sample(rng);
    const RoundingMode mode = i % 2 == 0 ? RoundingMode::NearestTiesEven : RoundingMode::Stochastic;
    RandomStream round_rng(mix_seed(seed ^ (i + 1)));
    const auto cr = run_compensated(x, Precision::half(), mode, &round_rng);
    const auto ce = compensated_child_errors(cr);
    worst = std::max(worst, ce.max_deviation);
    worst_base = std::max(worst_base, ce.base_case_deviation);
    if (ce.max_deviation > 1e-10 || !ce.base_case_exact || ce.base_case_deviation > 1e-10) ++failures;
  }
  return {"compensated-recurrence", failures == 0,
          std::to_string(runs) + " runs, worst recurrence deviation " + detail::fmt(worst) +
              ", worst base-case deviation " + detail::fmt(worst_base)};
}

inline SuiteResult constants_suite() {
  const ProbBudget budget{1e-2, 1e-3};
  const auto half = constants(1e5, 1e5, 1e5, std::ldexp(1.0, -11), budget);
  const auto single = constants(1e10, 1e10, 1e10, std::ldexp(1.0, -24), ProbBudget{1e-2, 1e-32});
  struct Check {
    const char* name;
    double value, target;
  };
  const Check checks[] = {
      {"sqrt(2 ln(2/delta))", half.first_order, 3.26},
      {"lambda(1e5, 1e-3)", half.lambda_n, 6.2},
      {"1 + phi (half)", 1.0 + half.phi_n, 4.4},
      {"lambda(1e10, 1e-32)", single.lambda_n, 14.0},
  };
  bool ok = 1.0 + single.phi_n < 1.12;
  std::ostringstream os;
  for (const auto& c : checks) {
    const double rel = std::fabs(c.value - c.target) / c.target;
    ok = ok && rel <= 0.02;
    os << c.name << " = " << detail::fmt(c.value) << "; ";
  }
  os << "1 + phi (single) = " << detail::fmt(1.0 + single.phi_n);
  return {"constants", ok, os.str()};
}

inline SuiteResult alpha_suite() {
  const bool exact = alpha_factor(0.0) == std::sqrt(6.0);
  const double u1 = std::ldexp(1.0, -24), u2 = std::ldexp(1.0, -32);
  const double r1 = alpha_squared_excess(u1) / (u1 * u1);
  const double r2 = alpha_squared_excess(u2) / (u2 * u2);
  const double spread = std::max(r1, r2) / std::min(r1, r2);
  const bool ok = exact && r1 > 0.0 && r2 > 0.0 && spread <= 2.0;
  return {"alpha-expansion", ok,
          std::string("alpha(0) == sqrt(6): ") + (exact ? "yes" : "no") + "; (alpha^2 - 6 - 26u)/u^2 = " +
              detail::fmt(r1) + " at 2^-24, " + detail::fmt(r2) + " at 2^-32"};
}

/// Residual slopes with a frozen roundoff pattern delta = r u, r in [-1, 1].
struct ConvergenceSlopes {
  double first_order = 0.0;
  double second_order = 0.0;
};

inline ConvergenceSlopes convergence_slopes(std::uint64_t seed, std::size_t instances = 6) {
  const int bits[] = {8, 11, 14};
  std::vector<double> us, first_res, second_res;
  for (int t : bits) {
    const double u = std::ldexp(1.0, -t);
    RandomStream rng(seed);
    double r1 = 0.0, r2 = 0.0;
    for (std::size_t i = 0; i < instances; ++i) {
      const std::size_t n = 20 + 6 * i;
      std::vector<double> x(n);
      for (auto& v : x) v = rng.uniform();
      const CompTree tree = i % 2 == 0 ? build_sequential(n) : build_pairwise(n);
      std::vector<double> delta(n - 1);
      for (auto& d : delta) d = (2.0 * rng.uniform() - 1.0) * u;
      const auto s = exact_partial_sums(tree, x);
      DoubleDouble lin;
      for (std::size_t k = 0; k < delta.size(); ++k) lin += s[k] * delta[k];
      r1 += std::fabs(model_tree_error(tree, x, delta) - lin.value());

      std::vector<double> eta(n, 0.0), sigma(n, 0.0), dl(n, 0.0), beta(n, 0.0);
      for (std::size_t k = 1; k < n; ++k) {
        eta[k] = k == 1 ? 0.0 : (2.0 * rng.uniform() - 1.0) * u;
        sigma[k] = (2.0 * rng.uniform() - 1.0) * u;
        dl[k] = (2.0 * rng.uniform() - 1.0) * u;
        beta[k] = (2.0 * rng.uniform() - 1.0) * u;
      }
      const CompensatedRoundoffs r{eta, sigma, dl, beta};
      std::vector<DoubleDouble> prefix(n);
      prefix[0] = DoubleDouble(x[0]);
      for (std::size_t k = 1; k < n; ++k) prefix[k] = prefix[k - 1] + DoubleDouble(x[k]);
      r2 += std::fabs(model_compensated_error(x, r) - compensated_second_order(r, x, prefix));
    }
    us.push_back(u);
    first_res.push_back(r1);
    second_res.push_back(r2);
  }
  return {detail::log_log_slope(us, first_res), detail::log_log_slope(us, second_res)};
}

inline SuiteResult convergence_suite(std::uint64_t seed) {
  const auto s = convergence_slopes(seed);
  const bool ok = std::fabs(s.first_order - 2.0) <= 0.3 && std::fabs(s.second_order - 3.0) <= 0.5;
  return {"convergence-order", ok,
          "first-order residual slope " + detail::fmt(s.first_order) + ", second-order residual slope " +
              detail::fmt(s.second_order)};
}

inline SuiteResult coverage_suite(const VerifyOptions& opts, std::vector<ExperimentRow>* rows_out = nullptr) {
  bool ok = true;
  std::ostringstream os;
  for (auto id : {ExperimentId::Seq, ExperimentId::Pairwise}) {
    ExperimentConfig cfg;
    cfg.experiment = id;
    cfg.n_grid = {10000};
    cfg.modes = {RoundingMode::Stochastic};
    cfg.trials = opts.coverage_trials;
    cfg.seed = opts.seed;
    cfg.threads = opts.threads;
    const auto result = run_experiment(cfg);
    for (const auto& e : coverage_report(result.rows, cfg.budget)) {
      if (e.bound != BoundId::ProbClosedPartial && e.bound != BoundId::ProbRec) continue;
      ok = ok && e.passed;
      os << to_string(id) << ' ' << to_string(e.bound) << ' ' << e.exceedances << '/' << e.rows << "; ";
    }
    if (rows_out) rows_out->insert(rows_out->end(), result.rows.begin(), result.rows.end());
  }
  os << "allowed fraction " << detail::fmt(coverage_allowance(0.011, opts.coverage_trials));
  return {"probabilistic-coverage", ok, os.str()};
}

namespace detail {

inline ExperimentResult trend_run(const VerifyOptions& opts, ExperimentId id, std::vector<std::size_t> grid,
                                  std::vector<RoundingMode> modes, std::size_t trials) {
  ExperimentConfig cfg;
  cfg.experiment = id;
  cfg.n_grid = std::move(grid);
  cfg.modes = std::move(modes);
  cfg.trials = trials;
  cfg.seed = opts.seed;
  cfg.threads = opts.threads;
  return run_experiment(cfg);
}

inline double median_slope(std::span<const ExperimentRow> rows, std::size_t n_max = std::numeric_limits<std::size_t>::max()) {
  const auto med = median_errors(rows);
  std::vector<double> n, e;
  for (const auto& m : med) {
    if (m.n > n_max) continue;
    n.push_back(static_cast<double>(m.n));
    e.push_back(m.median);
  }
  return log_log_slope(n, e);
}

inline double max_median(std::span<const ExperimentRow> rows) {
  double worst = 0.0;
  for (const auto& m : median_errors(rows)) worst = std::max(worst, m.median);
  return worst;
}

}  // namespace detail

/// Qualitative error trends at desk scale. With opts.full_scale the block
/// summation check at n = 10^6 is included.
inline SuiteResult trends_suite(const VerifyOptions& opts, std::vector<ExperimentRow>* rows_out = nullptr) {
  const double u = std::ldexp(1.0, -11);
  const auto grid = log_grid(100, 100000, 13);
  const std::vector<RoundingMode> both = {RoundingMode::NearestTiesEven, RoundingMode::Stochastic};
  const std::vector<RoundingMode> sr = {RoundingMode::Stochastic};
  auto keep = [&](const ExperimentResult& r) {
    if (rows_out) rows_out->insert(rows_out->end(), r.rows.begin(), r.rows.end());
  };
  std::ostringstream os;
  bool ok = true;

  // Sequential SR errors grow like sqrt(n) until the partial sums are so
  // large that their spacing exceeds the summands; from there on the
  // relative error levels off near sqrt(u). The growth is fitted below
  // that point.
  const auto seq = detail::trend_run(opts, ExperimentId::Seq, grid, sr, opts.trend_trials);
  const auto pw = detail::trend_run(opts, ExperimentId::Pairwise, grid, sr, opts.trend_trials);
  const double seq_slope = detail::median_slope(seq.rows, 10000);
  const double seq_slope_all = detail::median_slope(seq.rows);
  const double pw_slope = detail::median_slope(pw.rows);
  const bool a = seq_slope >= 0.35 && seq_slope <= 0.65 && std::fabs(pw_slope) <= 0.15;
  os << "(a) " << (a ? "ok" : "FAIL") << " slopes seq " << detail::fmt(seq_slope) << " (n <= 1e4; "
     << detail::fmt(seq_slope_all) << " up to 1e5) pairwise " << detail::fmt(pw_slope) << "; ";
  keep(seq);
  keep(pw);

  double shifted_worst = 0.0;
  for (auto id : {ExperimentId::ShiftedSeq, ExperimentId::ShiftedPairwise}) {
    const auto r = detail::trend_run(opts, id, grid, both, opts.trend_trials);
    shifted_worst = std::max(shifted_worst, detail::max_median(r.rows));
    keep(r);
  }
  const bool b = shifted_worst <= 10.0 * u;
  os << "(b) " << (b ? "ok" : "FAIL") << " shifted max median " << detail::fmt(shifted_worst / u) << "u; ";

  const auto comp = detail::trend_run(opts, ExperimentId::Compensated, grid, both, opts.trend_trials);
  const double comp_worst = detail::max_median(comp.rows);
  const bool c = comp_worst <= 10.0 * u;
  os << "(c) " << (c ? "ok" : "FAIL") << " compensated max median " << detail::fmt(comp_worst / u) << "u";
  keep(comp);
  ok = a && b && c;

  if (opts.full_scale) {
    const auto fab = detail::trend_run(opts, ExperimentId::Fabsum, {1000000}, sr, opts.large_fabsum_trials);
    const double fab_median = detail::max_median(fab.rows);
    const bool d = fab_median < u;
    os << "; (d) " << (d ? "ok" : "FAIL") << " fabsum SR median at 1e6 " << detail::fmt(fab_median / u) << "u";
    keep(fab);
    ok = ok && d;
  } else {
    os << "; (d) skipped (needs full scale)";
  }
  return {"figure-trends", ok, os.str()};
}

inline SuiteResult reduction_suite(std::uint64_t seed, std::size_t instances = 50) {
  RandomStream rng(seed);
  const ProbBudget budget;
  double worst = 0.0;
  const int precisions[] = {8, 11, 24};
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t n = detail::log_uniform_size(rng, 2, 2000);
    const Precision p(precisions[i % 3]);
    const CompTree tree = i % 3 == 0 ? build_sequential(n, p) : i % 3 == 1 ? build_pairwise(n, p) : build_random(n, rng, p);
    std::vector<double> x(n);
    for (auto& v : x) v = round_value(detail::uniform_in(rng, -1.0, 2.0), p, RoundingMode::NearestTiesEven);
    const auto s = to_doubles(exact_partial_sums(tree, x));
    const double scale = i % 2 == 0 ? 1.0 : 2.0;
    const auto gen = prob_bounds_general(tree, s, x, scale * p.unit_roundoff(), budget);
    const auto mix = mixed_bounds(tree, s, x, budget, scale);
    worst = std::max({worst, relative_deviation(mix.recurrence, gen.recurrence),
                      relative_deviation(mix.closed_partial, gen.closed_partial),
                      relative_deviation(mix.closed_inputs, gen.closed_inputs)});
  }
  return {"reduction-consistency", worst <= 1e-12,
          std::to_string(instances) + " mono-precision trees, worst relative deviation " + detail::fmt(worst)};
}

/// Sweeps every experiment in both modes and checks the deterministic bounds
/// against these rows and any rows collected from earlier suites.
inline SuiteResult domination_suite(const VerifyOptions& opts, std::span<const ExperimentRow> earlier = {}) {
  std::size_t rows = earlier.size();
  std::size_t violations = deterministic_violations(earlier);
  for (auto id : kAllExperiments) {
    ExperimentConfig cfg;
    cfg.experiment = id;
    cfg.n_grid = log_grid(10, 20000, 6);
    cfg.trials = 20;
    cfg.seed = opts.seed + 1;
    cfg.threads = opts.threads;
    for (const auto& dist : {InputDistribution::uniform(0.0, 1.0), InputDistribution::normal(1.0, 1.0)}) {
      cfg.distribution = dist;
      const auto r = run_experiment(cfg);
      rows += r.rows.size();
      violations += deterministic_violations(r.rows);
    }
  }
  return {"deterministic-domination", violations == 0,
          std::to_string(violations) + " exceedances of DET_PARTIAL/DET_INPUTS over " + std::to_string(rows) +
              " rows"};
}

inline std::vector<SuiteResult> run_all_suites(const VerifyOptions& opts,
                                               const std::function<void(const SuiteResult&)>& on_result = {}) {
  std::vector<SuiteResult> out;
  auto add = [&](SuiteResult r) {
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  };
  std::vector<ExperimentRow> rows;
  add(identity_suite(opts.seed));
  add(compensated_recurrence_suite(opts.seed + 7));
  add(constants_suite());
  add(alpha_suite());
  add(convergence_suite(opts.seed + 11));
  add(coverage_suite(opts, &rows));
  add(trends_suite(opts, &rows));
  add(reduction_suite(opts.seed + 13));
  add(domination_suite(opts, rows));
  return out;
}

}  // namespace sumerr
