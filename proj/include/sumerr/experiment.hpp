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

// Monte Carlo summation experiments: input generation, kernel runs, bound
// evaluation, CSV output and coverage statistics.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "sumerr/bounds.hpp"
#include "sumerr/comp_tree.hpp"
#include "sumerr/kernels.hpp"
#include "sumerr/precision.hpp"

namespace sumerr {

enum class ExperimentId { Seq, Pairwise, ShiftedSeq, ShiftedPairwise, Compensated, Fabsum };

inline constexpr std::array<ExperimentId, 6> kAllExperiments = {
    ExperimentId::Seq,        ExperimentId::Pairwise,    ExperimentId::ShiftedSeq,
    ExperimentId::ShiftedPairwise, ExperimentId::Compensated, ExperimentId::Fabsum};

inline std::string_view to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::Seq: return "seq";
    case ExperimentId::Pairwise: return "pairwise";
    case ExperimentId::ShiftedSeq: return "shifted-seq";
    case ExperimentId::ShiftedPairwise: return "shifted-pairwise";
    case ExperimentId::Compensated: return "compensated";
    case ExperimentId::Fabsum: return "fabsum";
  }
  return "?";
}

inline ExperimentId parse_experiment(std::string_view s) {
  for (auto id : kAllExperiments) {
    if (to_string(id) == s) return id;
  }
  throw std::invalid_argument("unknown experiment '" + std::string(s) + "'");
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& s, std::string_view what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string(what) + ": '" + s + "' is not a number");
  }
  if (pos != s.size()) throw std::invalid_argument(std::string(what) + ": '" + s + "' is not a number");
  return v;
}

// Accepts integers written as 100, 1e5 or 1.5e3.
inline std::size_t parse_count(const std::string& s, std::string_view what) {
  const double v = parse_double(s, what);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) {
    throw std::invalid_argument(std::string(what) + ": '" + s + "' is not a nonnegative integer");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace detail

/// `count` sizes log-spaced between lo and hi inclusive, rounded to integers
/// and deduplicated.
inline std::vector<std::size_t> log_grid(std::size_t lo, std::size_t hi, std::size_t count) {
  if (lo < 2 || hi < lo || count < 1) throw std::invalid_argument("log grid needs 2 <= lo <= hi and count >= 1");
  std::vector<std::size_t> out;
  if (count == 1 || lo == hi) return {lo};
  const double a = std::log10(static_cast<double>(lo));
  const double b = std::log10(static_cast<double>(hi));
  for (std::size_t i = 0; i < count; ++i) {
    const double e = a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
    out.push_back(static_cast<std::size_t>(std::llround(std::pow(10.0, e))));
  }
  out.front() = lo;
  out.back() = hi;
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// "100, 1000, 1e4" or "log(100, 1e5, 13)".
inline std::vector<std::size_t> parse_n_grid(std::string_view text) {
  const std::string s = detail::trim(text);
  if (s.rfind("log(", 0) == 0) {
    if (s.back() != ')') throw std::invalid_argument("n grid: expected log(lo, hi, count)");
    const auto parts = detail::split(std::string_view(s).substr(4, s.size() - 5), ',');
    if (parts.size() != 3) throw std::invalid_argument("n grid: expected log(lo, hi, count)");
    return log_grid(detail::parse_count(parts[0], "n grid"), detail::parse_count(parts[1], "n grid"),
                    detail::parse_count(parts[2], "n grid"));
  }
  std::vector<std::size_t> out;
  for (const auto& p : detail::split(s, ',')) out.push_back(detail::parse_count(p, "n grid"));
  return out;
}

struct InputDistribution {
  enum class Kind { Uniform, Normal };
  Kind kind = Kind::Uniform;
  double a = 0.0;  // lower end, or mean
  double b = 1.0;  // upper end, or standard deviation

  static InputDistribution uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
  static InputDistribution normal(double mean, double sd) { return {Kind::Normal, mean, sd}; }

  void validate() const {
    if (!std::isfinite(a) || !std::isfinite(b)) throw std::invalid_argument("distribution parameters must be finite");
    if (kind == Kind::Uniform && !(a < b)) throw std::invalid_argument("uniform(a, b) needs a < b");
    if (kind == Kind::Normal && !(b > 0.0)) throw std::invalid_argument("normal(mean, sd) needs sd > 0");
  }

  double sample(RandomStream& rng) const {
    if (kind == Kind::Uniform) return a + (b - a) * rng.uniform();
    // Box-Muller on our own uniforms keeps draws identical across standard libraries.
    double u1 = rng.uniform();
    while (u1 == 0.0) u1 = rng.uniform();
    const double u2 = rng.uniform();
    return a + b * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::string to_string() const {
    std::ostringstream os;
    os.precision(17);
    os << (kind == Kind::Uniform ? "uniform(" : "normal(") << a << "," << b << ")";
    return os.str();
  }

  static InputDistribution parse(std::string_view text) {
    const std::string s = detail::trim(text);
    const auto open = s.find('(');
    if (open == std::string::npos || s.back() != ')') {
      throw std::invalid_argument("distribution: expected uniform(a,b) or normal(mean,sd)");
    }
    const std::string name = detail::trim(std::string_view(s).substr(0, open));
    const auto args = detail::split(std::string_view(s).substr(open + 1, s.size() - open - 2), ',');
    if (args.size() != 2) throw std::invalid_argument("distribution: expected two parameters");
    InputDistribution d;
    if (name == "uniform") {
      d.kind = Kind::Uniform;
    } else if (name == "normal") {
      d.kind = Kind::Normal;
    } else {
      throw std::invalid_argument("distribution: unknown family '" + name + "'");
    }
    d.a = detail::parse_double(args[0], "distribution");
    d.b = detail::parse_double(args[1], "distribution");
    d.validate();
    return d;
  }
};

struct ExperimentConfig {
  ExperimentId experiment = ExperimentId::Seq;
  std::vector<std::size_t> n_grid = log_grid(100, 100000, 13);
  int t = 11;
  int t_hi = 24;            // fabsum only
  std::size_t block = 32;   // fabsum only
  std::vector<RoundingMode> modes = {RoundingMode::NearestTiesEven, RoundingMode::Stochastic};
  std::size_t trials = 100;
  InputDistribution distribution;
  ProbBudget budget;
  std::uint64_t seed = 42;
  std::string output;       // empty: standard output
  unsigned threads = 0;     // 0: hardware concurrency

  void validate() const {
    if (n_grid.empty()) throw std::invalid_argument("n grid is empty");
    if (!std::is_sorted(n_grid.begin(), n_grid.end())) throw std::invalid_argument("n grid must be sorted ascending");
    if (n_grid.front() < 2) throw std::invalid_argument("n grid values must be >= 2");
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (modes.empty()) throw std::invalid_argument("no rounding modes selected");
    (void)Precision(t);
    if (experiment == ExperimentId::Fabsum) {
      (void)Precision(t_hi);
      if (block < 1) throw std::invalid_argument("block size must be >= 1");
    }
    distribution.validate();
    budget.validate();
  }
};

/// Applies one `key = value` setting. Shared by the config file reader and
/// command-line overrides.
inline void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view raw) {
  const std::string k = detail::trim(key);
  const std::string v = detail::trim(raw);
  if (k == "experiment") {
    cfg.experiment = parse_experiment(v);
  } else if (k == "n") {
    cfg.n_grid = parse_n_grid(v);
  } else if (k == "t") {
    cfg.t = static_cast<int>(detail::parse_count(v, "t"));
  } else if (k == "t_hi") {
    cfg.t_hi = static_cast<int>(detail::parse_count(v, "t_hi"));
  } else if (k == "block") {
    cfg.block = detail::parse_count(v, "block");
  } else if (k == "modes") {
    cfg.modes.clear();
    for (const auto& m : detail::split(v, ',')) cfg.modes.push_back(parse_rounding_mode(m));
  } else if (k == "trials") {
    cfg.trials = detail::parse_count(v, "trials");
  } else if (k == "distribution") {
    cfg.distribution = InputDistribution::parse(v);
  } else if (k == "delta") {
    cfg.budget.delta = detail::parse_double(v, "delta");
  } else if (k == "eta") {
    cfg.budget.eta = detail::parse_double(v, "eta");
  } else if (k == "seed") {
    try {
      std::size_t pos = 0;
      if (v.empty() || v[0] == '-' || v[0] == '+') throw std::invalid_argument(v);
      cfg.seed = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
    } catch (const std::exception&) {
      throw std::invalid_argument("seed: '" + v + "' is not an unsigned integer");
    }
  } else if (k == "output") {
    cfg.output = v;
  } else if (k == "threads") {
    cfg.threads = static_cast<unsigned>(detail::parse_count(v, "threads"));
  } else {
    throw std::invalid_argument("unknown setting '" + k + "'");
  }
}

inline ExperimentConfig parse_config(std::istream& is, ExperimentConfig cfg = {}) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      apply_setting(cfg, std::string_view(line).substr(0, eq), std::string_view(line).substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig cfg = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
  return parse_config(in, std::move(cfg));
}

struct ExperimentRow {
  ExperimentId experiment = ExperimentId::Seq;
  std::size_t n = 0;
  RoundingMode mode = RoundingMode::NearestTiesEven;
  std::size_t trial = 0;
  double rel_error = 0.0;
  BoundReport bounds;  // relative to |s_n|
  std::uint64_t seed = 0;
};

inline bool row_order(const ExperimentRow& a, const ExperimentRow& b) {
  return std::tuple(static_cast<int>(a.experiment), a.n, static_cast<int>(a.mode), a.trial) <
         std::tuple(static_cast<int>(b.experiment), b.n, static_cast<int>(b.mode), b.trial);
}

/// Seed of the rounding stream for one trial.
inline std::uint64_t trial_seed(std::uint64_t master, ExperimentId id, std::size_t n, RoundingMode mode,
                                std::size_t trial) {
  std::uint64_t h = mix_seed(master);
  h = mix_seed(h ^ (static_cast<std::uint64_t>(id) + 1));
  h = mix_seed(h ^ n);
  h = mix_seed(h ^ (static_cast<std::uint64_t>(mode) + 0x100));
  return mix_seed(h ^ trial);
}

/// Seed of the inputs for one trial; independent of the rounding mode so
/// both modes sum the same data.
inline std::uint64_t input_seed(std::uint64_t master, ExperimentId id, std::size_t n, std::size_t trial) {
  std::uint64_t h = mix_seed(master ^ 0x696e707574ULL);
  h = mix_seed(h ^ (static_cast<std::uint64_t>(id) + 1));
  h = mix_seed(h ^ n);
  return mix_seed(h ^ trial);
}

inline std::vector<double> draw_inputs(const InputDistribution& dist, std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = dist.sample(rng);
  return x;
}

/// Kernel result and absolute bounds for one trial.
struct TrialOutcome {
  TracedRun run;
  BoundReport bounds;  // absolute
};

/// Runs one trial of cfg's experiment on x.
inline TrialOutcome run_trial(const ExperimentConfig& cfg, std::span<const double> x, RoundingMode mode,
                              RandomStream& rng) {
  const std::size_t n = x.size();
  const Precision p(cfg.t);
  const double u = roundoff_bound(p, mode);
  const double u_scale = mode == RoundingMode::Stochastic ? 2.0 : 1.0;
  TrialOutcome out;
  BoundReport& b = out.bounds;

  auto tree_kernel = [&](const CompTree& tree) {
    out.run = run_tree_sum(tree, x, mode, &rng);
    const auto s = to_doubles(out.run.exact_partial);
    const auto& xs = out.run.inputs;
    const auto det = det_bounds(tree, s, xs, u);
    b.set(BoundId::DetPartial, det.partial);
    b.set(BoundId::DetInputs, det.inputs);
    const auto prob = prob_bounds_general(tree, s, xs, u, cfg.budget);
    b.set(BoundId::ProbRec, prob.recurrence);
    b.set(BoundId::ProbClosedPartial, prob.closed_partial);
    b.set(BoundId::ProbClosedInputs, prob.closed_inputs);
  };

  auto shifted_kernel = [&](const CompTree& tree) {
    const double c = choose_shift(x, p);
    out.run = run_shifted_sum(tree, x, c, mode, &rng);
    const auto& sd = *out.run.shifted;
    const auto y = to_doubles(sd.exact_y);
    const auto t = to_doubles(sd.exact_inner);
    const double s_n = out.run.exact_sum.value();
    const std::size_t h = tree_stats(tree).height + 2;
    const auto prob = shifted_bounds(y, t, s_n, out.run.inputs, sd.shift, h, u, cfg.budget);
    b.set(BoundId::ShiftPartial, prob.partial);
    b.set(BoundId::ShiftInputs, prob.inputs);
    const auto det = shifted_det_bounds(y, t, s_n, out.run.inputs, sd.shift, h, u);
    b.set(BoundId::DetPartial, det.partial);
    b.set(BoundId::DetInputs, det.inputs);
  };

  switch (cfg.experiment) {
    case ExperimentId::Seq: tree_kernel(build_sequential(n, p)); break;
    case ExperimentId::Pairwise: tree_kernel(build_pairwise(n, p)); break;
    case ExperimentId::ShiftedSeq: shifted_kernel(build_sequential(n, p)); break;
    case ExperimentId::ShiftedPairwise: shifted_kernel(build_pairwise(n, p)); break;
    case ExperimentId::Compensated: {
      auto cr = run_compensated(x, p, mode, &rng);
      const auto s = to_doubles(cr.run.exact_partial);
      const auto cb = compensated_bounds(cr.run.inputs, s, u, cfg.budget);
      b.set(BoundId::CompDetPartial, cb.det_partial);
      b.set(BoundId::CompDetInputs, cb.det_inputs);
      b.set(BoundId::CompProbRec, cb.prob_rec);
      b.set(BoundId::CompProbPartial, cb.prob_partial);
      b.set(BoundId::CompProbInputs, cb.prob_inputs);
      out.run = std::move(cr.run);
      break;
    }
    case ExperimentId::Fabsum: {
      auto fr = run_fabsum(x, cfg.block, p, Precision(cfg.t_hi), sequential_builder(), mode, &rng);
      const auto s = to_doubles(fr.run.exact_partial);
      const auto& xs = fr.run.inputs;
      const auto mb = mixed_bounds(fr.tree, s, xs, cfg.budget, u_scale, cfg.block);
      b.set(BoundId::MixRec, mb.recurrence);
      b.set(BoundId::MixClosedPartial, mb.closed_partial);
      b.set(BoundId::MixClosedInputs, mb.closed_inputs);
      b.set(BoundId::FabsumInputs, mb.fabsum_inputs);
      b.set(BoundId::FabsumDetFirstOrder, *mb.fabsum_det_first_order);
      // Every node rounds with at most the low-precision unit roundoff.
      const auto det = det_bounds(fr.tree.with_precision(fr.tree.coarsest_leaf_precision()), s, xs,
                                  u_scale * std::max(p.unit_roundoff(), Precision(cfg.t_hi).unit_roundoff()));
      b.set(BoundId::DetPartial, det.partial);
      b.set(BoundId::DetInputs, det.inputs);
      out.run = std::move(fr.run);
      break;
    }
  }
  return out;
}

struct ExperimentResult {
  std::vector<ExperimentRow> rows;  // sorted by (n, mode, trial)
  std::size_t skipped_zero_sum = 0;
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Task {
    std::size_t n;
    RoundingMode mode;
    std::size_t trial;
  };
  std::vector<Task> tasks;
  for (std::size_t n : cfg.n_grid) {
    for (RoundingMode mode : cfg.modes) {
      for (std::size_t trial = 0; trial < cfg.trials; ++trial) tasks.push_back({n, mode, trial});
    }
  }
  std::vector<std::optional<ExperimentRow>> slots(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        const Task& task = tasks[i];
        const auto x = draw_inputs(cfg.distribution, task.n, input_seed(cfg.seed, cfg.experiment, task.n, task.trial));
        const std::uint64_t seed = trial_seed(cfg.seed, cfg.experiment, task.n, task.mode, task.trial);
        RandomStream rng(seed);
        const auto outcome = run_trial(cfg, x, task.mode, rng);
        const double s_n = std::fabs(outcome.run.exact_sum.value());
        if (s_n == 0.0) continue;
        ExperimentRow row;
        row.experiment = cfg.experiment;
        row.n = task.n;
        row.mode = task.mode;
        row.trial = task.trial;
        row.rel_error = outcome.run.relative_error();
        row.seed = seed;
        for (const auto& [id, v] : outcome.bounds.values()) row.bounds.set(id, v / s_n);
        slots[i] = std::move(row);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(tasks.size());
        return;
      }
    }
  };

  unsigned threads = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, tasks.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult result;
  for (auto& slot : slots) {
    if (slot) {
      result.rows.push_back(std::move(*slot));
    } else {
      ++result.skipped_zero_sum;
    }
  }
  std::sort(result.rows.begin(), result.rows.end(), row_order);
  return result;
}

// CSV ---------------------------------------------------------------------

inline constexpr int kCsvSchemaVersion = 1;

inline std::string csv_header() {
  std::string h = "schema_version,experiment,n,mode,trial,rel_error";
  for (auto id : kAllBoundIds) {
    h += ',';
    h += to_string(id);
  }
  h += ",seed";
  return h;
}

namespace detail {

inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_csv(std::ostream& os, std::span<const ExperimentRow> rows) {
  os << csv_header() << '\n';
  for (const auto& r : rows) {
    os << kCsvSchemaVersion << ',' << to_string(r.experiment) << ',' << r.n << ',' << to_string(r.mode) << ','
       << r.trial << ',' << detail::format_double(r.rel_error);
    for (auto id : kAllBoundIds) {
      os << ',';
      if (r.bounds.has(id)) os << detail::format_double(r.bounds.at(id));
    }
    os << ',' << r.seed << '\n';
  }
}

inline void write_csv_file(const std::string& path, std::span<const ExperimentRow> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(out, rows);
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

inline std::vector<ExperimentRow> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("CSV is empty");
  if (detail::trim(line) != csv_header()) throw std::runtime_error("CSV header does not match schema");
  std::vector<ExperimentRow> rows;
  std::size_t line_no = 1;
  const std::size_t columns = 7 + kAllBoundIds.size();
  while (std::getline(is, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != columns) throw std::runtime_error("CSV line " + std::to_string(line_no) + ": wrong column count");
    if (f[0] != std::to_string(kCsvSchemaVersion)) {
      throw std::runtime_error("CSV line " + std::to_string(line_no) + ": schema version " + f[0] + " not supported");
    }
    ExperimentRow r;
    r.experiment = parse_experiment(f[1]);
    r.n = detail::parse_count(f[2], "n");
    r.mode = parse_rounding_mode(f[3]);
    r.trial = detail::parse_count(f[4], "trial");
    r.rel_error = detail::parse_double(f[5], "rel_error");
    for (std::size_t i = 0; i < kAllBoundIds.size(); ++i) {
      const auto& cell = f[6 + i];
      if (cell.empty()) continue;
      r.bounds.set(kAllBoundIds[i], cell == "inf" ? std::numeric_limits<double>::infinity()
                                                  : detail::parse_double(cell, "bound"));
    }
    r.seed = std::stoull(f.back());
    rows.push_back(std::move(r));
  }
  return rows;
}

// Coverage ------------------------------------------------------------------

struct CoverageEntry {
  ExperimentId experiment = ExperimentId::Seq;
  std::size_t n = 0;
  BoundId bound = BoundId::DetPartial;
  std::size_t rows = 0;
  std::size_t exceedances = 0;
  double fraction = 0.0;
  double allowed = 0.0;  // delta + eta + 3 sigma, or 0 for deterministic bounds
  bool passed = false;
};

/// 3-sigma binomial margin around p for `trials` independent trials.
inline double coverage_allowance(double p, std::size_t trials) {
  return p + 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

/// Exceedance statistics of every bound over the stochastic-rounding rows of
/// each (experiment, n) point. Deterministic bounds must never be exceeded.
inline std::vector<CoverageEntry> coverage_report(std::span<const ExperimentRow> rows, const ProbBudget& budget,
                                                  std::size_t min_rows = 100) {
  budget.validate();
  std::map<std::pair<int, std::size_t>, std::vector<const ExperimentRow*>> groups;
  for (const auto& r : rows) {
    if (r.mode == RoundingMode::Stochastic) groups[{static_cast<int>(r.experiment), r.n}].push_back(&r);
  }
  if (groups.empty()) throw std::invalid_argument("coverage report needs stochastic-rounding rows");
  std::vector<CoverageEntry> out;
  for (const auto& [key, group] : groups) {
    if (group.size() < min_rows) {
      throw std::invalid_argument("coverage report needs at least " + std::to_string(min_rows) +
                                  " stochastic rows per point, n = " + std::to_string(key.second) + " has " +
                                  std::to_string(group.size()));
    }
    for (auto id : kAllBoundIds) {
      CoverageEntry e;
      e.experiment = group.front()->experiment;
      e.n = key.second;
      e.bound = id;
      for (const auto* r : group) {
        if (!r->bounds.has(id)) continue;
        ++e.rows;
        if (r->rel_error > r->bounds.at(id)) ++e.exceedances;
      }
      if (e.rows == 0) continue;
      e.fraction = static_cast<double>(e.exceedances) / static_cast<double>(e.rows);
      e.allowed = is_deterministic(id) ? 0.0 : coverage_allowance(budget.delta + budget.eta, e.rows);
      e.passed = e.fraction <= e.allowed;
      out.push_back(e);
    }
  }
  return out;
}

/// Rows (any rounding mode) whose error exceeds a deterministic bound.
inline std::size_t deterministic_violations(std::span<const ExperimentRow> rows) {
  std::size_t count = 0;
  for (const auto& r : rows) {
    for (auto id : {BoundId::DetPartial, BoundId::DetInputs}) {
      if (r.bounds.has(id) && r.rel_error > r.bounds.at(id)) ++count;
    }
  }
  return count;
}

/// Median relative error per (n, mode).
struct MedianPoint {
  std::size_t n = 0;
  RoundingMode mode = RoundingMode::NearestTiesEven;
  double median = 0.0;
};

inline std::vector<MedianPoint> median_errors(std::span<const ExperimentRow> rows) {
  std::map<std::pair<std::size_t, int>, std::vector<double>> groups;
  for (const auto& r : rows) groups[{r.n, static_cast<int>(r.mode)}].push_back(r.rel_error);
  std::vector<MedianPoint> out;
  for (auto& [key, v] : groups) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    const double med = m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
    out.push_back({key.first, static_cast<RoundingMode>(key.second), med});
  }
  return out;
}

}  // namespace sumerr
