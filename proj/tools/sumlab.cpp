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

// sumlab: run summation error experiments, verification suites and print
// bound constants.

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sumerr/sumerr.hpp"

namespace {

using namespace sumerr;

struct RunArgs {
  std::string config;
  std::map<std::string, std::string> overrides;
  bool coverage = false;
};

void print_coverage(std::ostream& os, std::span<const ExperimentRow> rows, const ProbBudget& budget) {
  for (const auto& e : coverage_report(rows, budget)) {
    os << to_string(e.experiment) << " n=" << e.n << ' ' << to_string(e.bound) << ": " << e.exceedances << '/'
       << e.rows << " exceed (allowed fraction " << e.allowed << ") " << (e.passed ? "ok" : "FAIL") << '\n';
  }
}

void emit(const ExperimentConfig& cfg, const ExperimentResult& result) {
  if (cfg.output.empty()) {
    write_csv(std::cout, result.rows);
  } else {
    write_csv_file(cfg.output, result.rows);
  }
  if (result.skipped_zero_sum > 0) {
    std::cerr << "skipped " << result.skipped_zero_sum << " trials with zero exact sum\n";
  }
}

int cmd_run(const RunArgs& args) {
  ExperimentConfig cfg;
  if (!args.config.empty()) cfg = load_config(args.config);
  for (const auto& [k, v] : args.overrides) apply_setting(cfg, k, v);
  const auto result = run_experiment(cfg);
  emit(cfg, result);
  if (args.coverage) print_coverage(std::cerr, result.rows, cfg.budget);
  return 0;
}

int cmd_verify(const VerifyOptions& opts) {
  bool all = true;
  run_all_suites(opts, [&](const SuiteResult& r) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << std::endl;
    all = all && r.passed;
  });
  return all ? 0 : 1;
}

struct ConstantsArgs {
  double n = 1e5;
  double h = 0;
  std::optional<double> n_tilde;
  int t = 11;
  double delta = 1e-2;
  double eta = 1e-3;
};

int cmd_constants(const ConstantsArgs& a) {
  const double h = a.h > 0 ? a.h : a.n;
  const double u = Precision(a.t).unit_roundoff();
  const auto c = constants(a.n, a.n_tilde.value_or(a.n), h, u, ProbBudget{a.delta, a.eta});
  std::cout << std::setprecision(6);
  std::cout << "n                     " << a.n << "\n"
            << "h                     " << h << "\n"
            << "u                     " << u << "\n"
            << "lambda_h = (1+u)^h    " << c.lambda_h << "\n"
            << "sqrt(2 ln(2/delta))   " << c.first_order << "\n"
            << "lambda_{n,eta}        " << c.lambda_n << "\n"
            << "lambda_{n~,eta}       " << c.lambda_n_tilde << "\n"
            << "1 + phi_{n,h,eta}     " << 1.0 + c.phi_n << "\n"
            << "1 + phi_{n~,h,eta}    " << 1.0 + c.phi_n_tilde << "\n"
            << "alpha                 " << c.alpha << "\n"
            << "gamma                 " << c.gamma << "\n"
            << "beta = u(1+u)^2       " << c.beta_aux << "\n";
  return 0;
}

struct FiguresArgs {
  std::string which = "all";
  std::string nmin = "100";
  std::string nmax;
  std::size_t points = 13;
  std::size_t trials = 100;
  bool full_scale = false;
  std::string out_dir = ".";
  std::uint64_t seed = 42;
  unsigned threads = 0;
};

int cmd_figures(const FiguresArgs& a) {
  std::map<std::string, std::vector<ExperimentId>> groups = {
      {"sequential", {ExperimentId::Seq, ExperimentId::Pairwise}},
      {"shifted", {ExperimentId::ShiftedSeq, ExperimentId::ShiftedPairwise}},
      {"compensated", {ExperimentId::Compensated}},
      {"fabsum", {ExperimentId::Fabsum}},
  };
  std::vector<ExperimentId> ids;
  if (a.which == "all") {
    ids.assign(kAllExperiments.begin(), kAllExperiments.end());
  } else if (auto it = groups.find(a.which); it != groups.end()) {
    ids = it->second;
  } else {
    ids = {parse_experiment(a.which)};
  }
  std::filesystem::create_directories(a.out_dir);
  const std::size_t nmin = detail::parse_count(a.nmin, "nmin");
  for (auto id : ids) {
    const bool large = id == ExperimentId::Compensated || id == ExperimentId::Fabsum;
    const std::size_t nmax = !a.nmax.empty() ? detail::parse_count(a.nmax, "nmax")
                                             : (a.full_scale && large ? 10000000 : 100000);
    ExperimentConfig cfg;
    cfg.experiment = id;
    cfg.n_grid = log_grid(nmin, nmax, a.points);
    cfg.trials = a.trials;
    cfg.seed = a.seed;
    cfg.threads = a.threads;
    cfg.output = (std::filesystem::path(a.out_dir) / (std::string(to_string(id)) + ".csv")).string();
    const auto result = run_experiment(cfg);
    emit(cfg, result);
    std::cerr << "wrote " << result.rows.size() << " rows to " << cfg.output << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sumlab: floating-point summation error experiments"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "run one experiment and write CSV");
  run->add_option("-c,--config", run_args.config, "key = value configuration file")->check(CLI::ExistingFile);
  for (const char* key : {"experiment", "n", "t", "t_hi", "block", "modes", "trials", "distribution", "delta", "eta",
                          "seed", "output", "threads"}) {
    std::string flag = std::string("--") + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    run->add_option_function<std::string>(
        flag, [key, &run_args](const std::string& v) { run_args.overrides[key] = v; },
        std::string("override '") + key + "'");
  }
  run->add_flag("--coverage", run_args.coverage, "print exceedance statistics to stderr");

  VerifyOptions verify_opts;
  auto* verify = app.add_subcommand("verify", "run the oracle and invariant suites");
  verify->add_option("--seed", verify_opts.seed, "master seed");
  verify->add_option("--threads", verify_opts.threads, "worker threads (0: all cores)");
  verify->add_flag("--full-scale", verify_opts.full_scale, "include the n = 10^6 block summation trend");

  ConstantsArgs const_args;
  auto* cons = app.add_subcommand("constants", "print the bound constants");
  cons->set_help_flag("--help", "print this help message and exit");
  cons->add_option("--n", const_args.n, "number of summands")->check(CLI::Range(2.0, 1e300));
  cons->add_option("--h", const_args.h, "tree height (default: n)");
  cons->add_option("--n-tilde", const_args.n_tilde, "nodes with a non-leaf child (default: n)");
  cons->add_option("--t", const_args.t, "significand bits")->check(CLI::Range(1, 52));
  cons->add_option("--delta", const_args.delta, "first-order failure probability");
  cons->add_option("--eta", const_args.eta, "higher-order failure probability");

  FiguresArgs fig_args;
  auto* figs = app.add_subcommand("figures", "emit the figure datasets as CSV files");
  figs->add_option("--which", fig_args.which, "all, sequential, shifted, compensated, fabsum or an experiment id");
  figs->add_option("--nmin", fig_args.nmin, "smallest n");
  figs->add_option("--nmax", fig_args.nmax, "largest n (default 1e5, or 1e7 at full scale)");
  figs->add_option("--points", fig_args.points, "grid points")->check(CLI::PositiveNumber);
  figs->add_option("--trials", fig_args.trials, "trials per point")->check(CLI::PositiveNumber);
  figs->add_flag("--full-scale", fig_args.full_scale, "extend compensated and fabsum to n = 10^7");
  figs->add_option("--out-dir", fig_args.out_dir, "output directory");
  figs->add_option("--seed", fig_args.seed, "master seed");
  figs->add_option("--threads", fig_args.threads, "worker threads (0: all cores)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_args);
    if (*verify) return cmd_verify(verify_opts);
    if (*cons) return cmd_constants(const_args);
    if (*figs) return cmd_figures(fig_args);
  } catch (const std::exception& e) {
    std::cerr << "sumlab: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
