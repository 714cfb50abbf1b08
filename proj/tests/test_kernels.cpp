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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "sumerr/kernels.hpp"

namespace sumerr {
namespace {

std::vector<double> uniform_inputs(std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform();
  return x;
}

TEST(TreeSum, ExactWhenEverythingIsRepresentable) {
  std::vector<double> x(100);
  std::iota(x.begin(), x.end(), 1.0);
  const auto run = run_tree_sum(build_pairwise(100, Precision(24)), x, RoundingMode::NearestTiesEven);
  EXPECT_EQ(run.computed_sum, 5050.0);
  EXPECT_EQ(run.error, 0.0);
  EXPECT_EQ(run.trace.size(), 99u);
  for (std::size_t k = 0; k < run.trace.size(); ++k) {
    EXPECT_EQ(run.trace[k].op_id, k);
    EXPECT_EQ(run.trace[k].delta, 0.0);
    EXPECT_EQ(run.trace[k].role, OpRole::NodeSum);
  }
}

TEST(TreeSum, RoundToNearestStagnates) {
  // At t = 11, 2048 + 1 is a tie between 2048 and 2050 and goes to 2048.
  const std::vector<double> ones(4096, 1.0);
  const auto run = run_tree_sum(build_sequential(4096), ones, RoundingMode::NearestTiesEven);
  EXPECT_EQ(run.computed_sum, 2048.0);
  EXPECT_EQ(run.exact_sum.value(), 4096.0);
  EXPECT_DOUBLE_EQ(run.relative_error(), 0.5);
}

TEST(TreeSum, StochasticRoundingAvoidsStagnation) {
  const std::vector<double> ones(4096, 1.0);
  const auto tree = build_sequential(4096);
  double mean = 0.0;
  const int trials = 200;
  for (int i = 0; i < trials; ++i) {
    RandomStream rng(1000 + i);
    mean += run_tree_sum(tree, ones, RoundingMode::Stochastic, &rng).computed_sum;
  }
  mean /= trials;
  // Each of the 2048 additions past 2048 has variance 1 (step 2, p = 1/2),
  // so a single run has standard deviation ~45.
  EXPECT_NEAR(mean, 4096.0, 4.0 * 45.3 / std::sqrt(trials));
}

TEST(TreeSum, StochasticIsReproducibleFromSeed) {
  const auto x = uniform_inputs(500, 1);
  const auto tree = build_pairwise(500);
  RandomStream a(7), b(7), c(8);
  const auto ra = run_tree_sum(tree, x, RoundingMode::Stochastic, &a);
  const auto rb = run_tree_sum(tree, x, RoundingMode::Stochastic, &b);
  const auto rc = run_tree_sum(tree, x, RoundingMode::Stochastic, &c);
  EXPECT_EQ(ra.computed_sum, rb.computed_sum);
  EXPECT_EQ(ra.node_deltas(), rb.node_deltas());
  EXPECT_NE(ra.node_deltas(), rc.node_deltas());
}

TEST(TreeSum, InputsAreQuantizedToWorkingPrecision) {
  const std::vector<double> x = {0.1, 0.2, 0.3};
  const auto run = run_tree_sum(build_sequential(3, Precision(8)), x, RoundingMode::NearestTiesEven);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_TRUE(is_representable(run.inputs[i], Precision(8)));
    EXPECT_LE(std::fabs(run.inputs[i] - x[i]), std::ldexp(1.0, -8) * x[i]);
  }
  EXPECT_GT(run.input_quantization, 0.0);
  // The error is measured against the quantized inputs.
  EXPECT_EQ(run.exact_sum.value(), (DoubleDouble(run.inputs[0]) + run.inputs[1] + run.inputs[2]).value());
}

TEST(TreeSum, RejectsMismatchedInputs) {
  EXPECT_THROW(run_tree_sum(build_sequential(3), std::vector<double>{1, 2}, RoundingMode::NearestTiesEven),
               std::invalid_argument);
  EXPECT_THROW(run_tree_sum(build_sequential(2), std::vector<double>{1, 2}, RoundingMode::Stochastic),
               std::invalid_argument);
}

// Property: every node's computed value is the rounded sum of its computed
// children, and node deltas stay within the per-mode bound.
TEST(TreeSum, TraceIsConsistentWithComputedValues) {
  RandomStream pick(5);
  for (int i = 0; i < 40; ++i) {
    const std::size_t n = 2 + static_cast<std::size_t>(pick.uniform() * 400);
    const auto x = uniform_inputs(n, 50 + i);
    const auto tree = build_random(n, pick, Precision(8 + i % 10));
    const RoundingMode mode = i % 2 ? RoundingMode::Stochastic : RoundingMode::NearestTiesEven;
    RandomStream rng(i);
    const auto run = run_tree_sum(tree, x, mode, &rng);
    for (std::size_t k = 0; k < tree.internal_count(); ++k) {
      const auto& node = tree.node(k);
      auto val = [&](NodeRef r) { return r.is_leaf() ? run.inputs[r.index] : run.computed_partial[r.index]; };
      const auto exact = two_sum(val(node.left), val(node.right));
      const double expected = DoubleDouble(exact.sum, exact.err).value() * (1.0 + run.trace[k].delta);
      EXPECT_NEAR(run.computed_partial[k], expected, 1e-12 * std::fabs(expected) + 1e-300);
      EXPECT_LE(std::fabs(run.trace[k].delta), run.trace[k].bound);
    }
  }
}

TEST(Shifted, ChoosesMidrangeShift) {
  const std::vector<double> x = {0.25, 0.75, 0.5, 1.0};
  EXPECT_EQ(choose_shift(x, Precision(11)), 0.625);
  EXPECT_THROW(choose_shift(std::vector<double>{}, Precision(11)), std::invalid_argument);
}

TEST(Shifted, TraceLayout) {
  const std::size_t n = 50;
  const auto x = uniform_inputs(n, 3);
  RandomStream rng(1);
  const auto tree = build_sequential(n);
  const auto run = run_shifted_sum(tree, x, choose_shift(x, Precision(11)), RoundingMode::Stochastic, &rng);
  ASSERT_EQ(run.trace.size(), 2 * n + 1);
  for (std::size_t k = 0; k < n; ++k) EXPECT_EQ(run.trace[k].role, OpRole::ShiftSubtract);
  for (std::size_t k = n; k < 2 * n - 1; ++k) EXPECT_EQ(run.trace[k].role, OpRole::NodeSum);
  EXPECT_EQ(run.trace[2 * n - 1].role, OpRole::ShiftMultiply);
  EXPECT_EQ(run.trace[2 * n].role, OpRole::ShiftCombine);
  ASSERT_TRUE(run.shifted.has_value());
  EXPECT_EQ(run.shifted->exact_y.size(), n + 1);
  EXPECT_EQ(run.shifted->exact_y[n].value(), static_cast<double>(n) * run.shifted->shift);
}

TEST(Shifted, ConstantInputsSumExactly) {
  const std::vector<double> x(37, 0.75);
  const auto run = run_shifted_sum(build_pairwise(37), x, 0.75, RoundingMode::NearestTiesEven);
  EXPECT_EQ(run.computed_sum, 37 * 0.75);
  EXPECT_EQ(run.error, 0.0);
}

TEST(Shifted, MoreAccurateThanPlainSequential) {
  const std::size_t n = 20000;
  double plain = 0.0, shifted = 0.0;
  for (int i = 0; i < 5; ++i) {
    const auto x = uniform_inputs(n, 200 + i);
    const auto tree = build_sequential(n);
    plain += run_tree_sum(tree, x, RoundingMode::NearestTiesEven).relative_error();
    shifted += run_shifted_sum(tree, x, choose_shift(x, Precision(11)), RoundingMode::NearestTiesEven)
                   .relative_error();
  }
  EXPECT_LT(shifted, 0.1 * plain);
}

TEST(Compensated, TraceLayout) {
  const std::size_t n = 30;
  const auto x = uniform_inputs(n, 9);
  RandomStream rng(2);
  const auto cr = run_compensated(x, Precision(11), RoundingMode::Stochastic, &rng);
  ASSERT_EQ(cr.run.trace.size(), 4 * (n - 1));
  const OpRole roles[] = {OpRole::CompY, OpRole::CompS, OpRole::CompZ, OpRole::CompC};
  for (std::size_t i = 0; i < cr.run.trace.size(); ++i) EXPECT_EQ(cr.run.trace[i].role, roles[i % 4]);
  // y_2 = x_2 - 0 is exact.
  EXPECT_EQ(cr.steps.eta[1], 0.0);
  EXPECT_EQ(cr.steps.y[1], cr.run.inputs[1]);
  EXPECT_EQ(cr.run.computed_partial.size(), n - 1);
  EXPECT_EQ(cr.run.computed_sum, cr.steps.s[n - 1]);
}

TEST(Compensated, RecoversLostLowOrderBits) {
  // RTN plain summation of ones stagnates at 2048; the compensation term
  // carries the lost units forward.
  const std::vector<double> ones(4096, 1.0);
  const auto cr = run_compensated(ones, Precision(11), RoundingMode::NearestTiesEven);
  EXPECT_LE(std::fabs(cr.run.error), 4.0);
}

TEST(Compensated, ErrorNearUnitRoundoff) {
  const std::size_t n = 50000;
  const auto x = uniform_inputs(n, 17);
  const auto cr = run_compensated(x, Precision(11), RoundingMode::NearestTiesEven);
  EXPECT_LE(cr.run.relative_error(), 2.0 * std::ldexp(1.0, -11));
  EXPECT_THROW(run_compensated(std::vector<double>{1.0}, Precision(11), RoundingMode::NearestTiesEven),
               std::invalid_argument);
}

TEST(Fabsum, UsesBothPrecisions) {
  const auto x = uniform_inputs(1000, 4);
  RandomStream rng(3);
  const auto fr = run_fabsum(x, 32, Precision(11), Precision(24), sequential_builder(), RoundingMode::Stochastic, &rng);
  EXPECT_EQ(fr.run.algorithm, Algorithm::FABsum);
  EXPECT_EQ(fr.run.trace.size(), 999u);
  std::size_t lo = 0, hi = 0;
  for (const auto& r : fr.run.trace) {
    if (r.bound == 2.0 * std::ldexp(1.0, -11)) ++lo;
    if (r.bound == 2.0 * std::ldexp(1.0, -24)) ++hi;
  }
  EXPECT_EQ(lo, 31u * 31u + 7u);  // 31 full blocks and a block of 8
  EXPECT_EQ(hi, 31u);
}

TEST(Fabsum, MoreAccurateThanLowPrecisionSequential) {
  const auto x = uniform_inputs(100000, 21);
  const auto fab = run_fabsum(x, 32, Precision(11), Precision(24), sequential_builder(), RoundingMode::NearestTiesEven);
  const auto seq = run_tree_sum(build_sequential(x.size()), x, RoundingMode::NearestTiesEven);
  EXPECT_LT(fab.run.relative_error(), 0.01 * seq.relative_error());
}

}  // namespace
}  // namespace sumerr
