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

// Summation kernels executed in emulated precision with a full roundoff
// trace: tree summation, shifted tree summation, compensated (Kahan)
// summation and mixed-precision block summation.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "sumerr/comp_tree.hpp"
#include "sumerr/double_double.hpp"
#include "sumerr/precision.hpp"

namespace sumerr {

enum class Algorithm { TreeSum, Shifted, Compensated, FABsum };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::TreeSum: return "tree";
    case Algorithm::Shifted: return "shifted";
    case Algorithm::Compensated: return "compensated";
    case Algorithm::FABsum: return "fabsum";
  }
  return "?";
}

/// Artifacts specific to shifted summation.
struct ShiftDetail {
  double shift = 0.0;                    // c, as used (representable)
  std::vector<double> computed_y;        // y_k = fl(x_k - c), k = 1..n
  double computed_nc = 0.0;              // fl(n c)
  std::vector<DoubleDouble> exact_y;     // x_k - c for k = 1..n, then n c
  std::vector<DoubleDouble> exact_inner; // exact partial sums t_k of the inner tree over exact y
  double computed_inner = 0.0;           // computed t_n
};

struct TracedRun {
  Algorithm algorithm = Algorithm::TreeSum;
  std::vector<double> inputs;        // after quantisation to the working precision
  double input_quantization = 0.0;   // sum |quantised - raw|, excluded from error
  DoubleDouble exact_sum;
  double computed_sum = 0.0;
  double error = 0.0;                // computed_sum - exact_sum
  std::vector<double> computed_partial;       // per internal node / step
  std::vector<DoubleDouble> exact_partial;    // per internal node / step
  std::vector<RoundoffRecord> trace;
  std::optional<ShiftDetail> shifted;

  double relative_error() const {
    const double s = std::fabs(exact_sum.value());
    return s == 0.0 ? 0.0 : std::fabs(error) / s;
  }

  /// Node roundoffs of a tree run indexed by internal node.
  std::vector<double> node_deltas() const {
    std::vector<double> d(computed_partial.size(), 0.0);
    for (const auto& r : trace) {
      if (r.role == OpRole::NodeSum) d.at(r.op_id) = r.delta;
    }
    return d;
  }
};

/// Per-step values and roundoffs of compensated summation. Entry i holds
/// step k = i + 1; entry 0 carries s_1 = x_1 and c_1 = 0 only.
struct CompensatedTrace {
  std::vector<double> y, s, z, c;
  std::vector<double> eta, sigma, delta, beta;

  std::size_t size() const { return s.size(); }
};

namespace detail {

inline std::vector<double> quantize(std::span<const double> raw, Precision p, double& total) {
  std::vector<double> out;
  out.reserve(raw.size());
  total = 0.0;
  for (double v : raw) {
    const double r = round_value(v, p, RoundingMode::NearestTiesEven);
    total += std::fabs(r - v);
    out.push_back(r);
  }
  return out;
}

inline void finish_run(TracedRun& run) {
  run.error = difference(DoubleDouble(run.computed_sum), run.exact_sum);
}

// Tree summation over already-quantised operands; appends node records.
inline double sum_over_tree(const CompTree& tree, std::span<const double> operands, RoundingMode mode,
                            RandomStream* rng, std::vector<double>& computed,
                            std::vector<RoundoffRecord>& trace) {
  computed.assign(tree.internal_count(), 0.0);
  auto value = [&](NodeRef r) { return r.is_leaf() ? operands[r.index] : computed[r.index]; };
  for (std::size_t k = 0; k < tree.internal_count(); ++k) {
    const auto& node = tree.node(k);
    auto [v, rec] = emulated_add(value(node.left), value(node.right), node.precision, mode, rng);
    rec.op_id = k;
    rec.role = OpRole::NodeSum;
    computed[k] = v;
    trace.push_back(rec);
  }
  return computed[tree.root()];
}

}  // namespace detail

/// Sums x over the tree, each node rounding to its own precision. Inputs are
/// first rounded to nearest in the coarsest precision that reads a leaf; that
/// quantisation is reported separately and is not part of the error.
inline TracedRun run_tree_sum(const CompTree& tree, std::span<const double> x, RoundingMode mode,
                              RandomStream* rng = nullptr) {
  if (x.size() != tree.leaf_count()) throw std::invalid_argument("input length does not match tree");
  detail::check_mode(mode, rng);
  TracedRun run;
  run.algorithm = Algorithm::TreeSum;
  run.inputs = detail::quantize(x, tree.coarsest_leaf_precision(), run.input_quantization);
  run.exact_partial = exact_partial_sums(tree, run.inputs);
  run.exact_sum = run.exact_partial.back();
  run.trace.reserve(tree.internal_count());
  run.computed_sum = detail::sum_over_tree(tree, run.inputs, mode, rng, run.computed_partial, run.trace);
  detail::finish_run(run);
  return run;
}

/// (min + max) / 2, rounded to nearest in p.
inline double choose_shift(std::span<const double> x, Precision p) {
  if (x.empty()) throw std::invalid_argument("choose_shift needs at least one input");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return round_value(*lo / 2.0 + *hi / 2.0, p, RoundingMode::NearestTiesEven);
}

/// Shifted summation: y_k = x_k - c, t_n = tree sum of y, s_n = t_n + n c.
/// The subtraction for x_k uses the precision of x_k's parent node; n c and
/// the final addition use the root precision. Trace order: n subtractions,
/// n - 1 node sums, the multiplication, the final addition.
inline TracedRun run_shifted_sum(const CompTree& tree, std::span<const double> x, double c,
                                 RoundingMode mode, RandomStream* rng = nullptr) {
  const std::size_t n = tree.leaf_count();
  if (x.size() != n) throw std::invalid_argument("input length does not match tree");
  detail::require_finite(c);
  detail::check_mode(mode, rng);
  const Precision work = tree.coarsest_leaf_precision();
  const Precision root_p = tree.node(tree.root()).precision;

  TracedRun run;
  run.algorithm = Algorithm::Shifted;
  run.inputs = detail::quantize(x, work, run.input_quantization);
  ShiftDetail sd;
  sd.shift = round_value(c, work, RoundingMode::NearestTiesEven);
  run.trace.reserve(2 * n + 1);

  sd.computed_y.resize(n);
  sd.exact_y.resize(n + 1);
  for (std::size_t k = 0; k < n; ++k) {
    auto [v, rec] = emulated_sub(run.inputs[k], sd.shift, tree.node(tree.leaf_parent(k)).precision, mode, rng);
    rec.op_id = k;
    rec.role = OpRole::ShiftSubtract;
    sd.computed_y[k] = v;
    run.trace.push_back(rec);
    sd.exact_y[k] = DoubleDouble(run.inputs[k]) - DoubleDouble(sd.shift);
  }
  const double count = static_cast<double>(n);
  sd.exact_y[n] = DoubleDouble(two_prod(count, sd.shift).sum, two_prod(count, sd.shift).err);

  // Exact inner partial sums over exact y.
  sd.exact_inner.resize(tree.internal_count());
  auto exact_val = [&](NodeRef r) { return r.is_leaf() ? sd.exact_y[r.index] : sd.exact_inner[r.index]; };
  for (std::size_t k = 0; k < tree.internal_count(); ++k) {
    sd.exact_inner[k] = exact_val(tree.node(k).left) + exact_val(tree.node(k).right);
  }

  sd.computed_inner = detail::sum_over_tree(tree, sd.computed_y, mode, rng, run.computed_partial, run.trace);

  auto [nc, mul_rec] = emulated_mul(count, sd.shift, root_p, mode, rng);
  mul_rec.op_id = n;
  mul_rec.role = OpRole::ShiftMultiply;
  run.trace.push_back(mul_rec);
  sd.computed_nc = nc;

  auto [total, add_rec] = emulated_add(sd.computed_inner, nc, root_p, mode, rng);
  add_rec.op_id = n + 1;
  add_rec.role = OpRole::ShiftCombine;
  run.trace.push_back(add_rec);

  DoubleDouble exact;
  for (double v : run.inputs) exact += v;
  run.exact_sum = exact;
  run.exact_partial = sd.exact_inner;
  run.computed_sum = total;
  run.shifted = std::move(sd);
  detail::finish_run(run);
  return run;
}

struct CompensatedRun {
  TracedRun run;
  CompensatedTrace steps;
};

/// Compensated summation, c subtracted from the next input:
///     y_k = x_k - c_{k-1};  s_k = s_{k-1} + y_k;
///     z_k = s_k - s_{k-1};  c_k = z_k - y_k.
/// Each of the four lines is one traced operation (roles CompY, CompS,
/// CompZ, CompC), so the trace holds 4(n - 1) records; eta_2 is always 0.
inline CompensatedRun run_compensated(std::span<const double> x, Precision p, RoundingMode mode,
                                      RandomStream* rng = nullptr) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("compensated summation needs n >= 2");
  detail::check_mode(mode, rng);
  CompensatedRun out;
  TracedRun& run = out.run;
  CompensatedTrace& ct = out.steps;
  run.algorithm = Algorithm::Compensated;
  run.inputs = detail::quantize(x, p, run.input_quantization);
  const auto& xs = run.inputs;

  for (auto* v : {&ct.y, &ct.s, &ct.z, &ct.c, &ct.eta, &ct.sigma, &ct.delta, &ct.beta}) v->assign(n, 0.0);
  ct.s[0] = xs[0];
  run.trace.reserve(4 * (n - 1));
  run.computed_partial.reserve(n - 1);
  run.exact_partial.reserve(n - 1);

  DoubleDouble exact(xs[0]);
  auto record = [&](OpResult r, std::size_t step, OpRole role) {
    r.record.op_id = step;
    r.record.role = role;
    run.trace.push_back(r.record);
    return r;
  };
  for (std::size_t i = 1; i < n; ++i) {
    const auto y = record(emulated_sub(xs[i], ct.c[i - 1], p, mode, rng), i, OpRole::CompY);
    const auto s = record(emulated_add(ct.s[i - 1], y.value, p, mode, rng), i, OpRole::CompS);
    const auto z = record(emulated_sub(s.value, ct.s[i - 1], p, mode, rng), i, OpRole::CompZ);
    const auto c = record(emulated_sub(z.value, y.value, p, mode, rng), i, OpRole::CompC);
    ct.y[i] = y.value;
    ct.s[i] = s.value;
    ct.z[i] = z.value;
    ct.c[i] = c.value;
    ct.eta[i] = y.record.delta;
    ct.sigma[i] = s.record.delta;
    ct.delta[i] = z.record.delta;
    ct.beta[i] = c.record.delta;
    exact += xs[i];
    run.exact_partial.push_back(exact);
    run.computed_partial.push_back(s.value);
  }
  run.exact_sum = exact;
  run.computed_sum = ct.s[n - 1];
  detail::finish_run(run);
  return out;
}

struct FabsumRun {
  CompTree tree;
  TracedRun run;
};

/// Mixed-precision block summation: blocks of b reduced by `inner` in lo,
/// block results reduced sequentially in hi.
inline FabsumRun run_fabsum(std::span<const double> x, std::size_t b, Precision lo, Precision hi,
                            const TreeBuilder& inner, RoundingMode mode, RandomStream* rng = nullptr,
                            const TreeBuilder& outer = sequential_builder()) {
  CompTree tree = build_fabsum(x.size(), b, inner, outer, lo, hi);
  TracedRun run = run_tree_sum(tree, x, mode, rng);
  run.algorithm = Algorithm::FABsum;
  return {std::move(tree), std::move(run)};
}

}  // namespace sumerr
