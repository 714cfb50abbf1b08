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

#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "sumerr/comp_tree.hpp"

namespace sumerr {
namespace {

std::size_t ceil_log2(std::size_t n) {
  std::size_t h = 0;
  while ((std::size_t{1} << h) < n) ++h;
  return h;
}

// Reference height by explicit recursion from the root.
std::size_t depth_below(const CompTree& tree, NodeRef r) {
  if (r.is_leaf()) return 0;
  const auto& node = tree.node(r.index);
  return 1 + std::max(depth_below(tree, node.left), depth_below(tree, node.right));
}

TEST(Sequential, Shape) {
  for (std::size_t n : {2u, 3u, 10u, 257u}) {
    const auto tree = build_sequential(n);
    const auto st = tree_stats(tree);
    EXPECT_EQ(tree.internal_count(), n - 1);
    EXPECT_EQ(st.height, n - 1);
    EXPECT_EQ(st.leaf_pair_count, 1u);
    EXPECT_EQ(st.n_tilde, n - 2);
  }
  EXPECT_THROW(build_sequential(1), std::invalid_argument);
}

TEST(Pairwise, HeightIsCeilLog2) {
  for (std::size_t n = 2; n <= 1100; ++n) {
    const auto tree = build_pairwise(n);
    ASSERT_EQ(tree_stats(tree).height, ceil_log2(n)) << n;
  }
}

TEST(Pairwise, PowerOfTwoLeafPairs) {
  const auto st = tree_stats(build_pairwise(64));
  EXPECT_EQ(st.leaf_pair_count, 32u);
  EXPECT_EQ(st.n_tilde, 64u - 32u - 1u);
}

TEST(RandomTree, ValidAndVaried) {
  RandomStream rng(4);
  std::set<std::size_t> heights;
  for (int i = 0; i < 200; ++i) {
    const auto tree = build_random(4, rng);
    heights.insert(tree_stats(tree).height);
  }
  EXPECT_EQ(heights, (std::set<std::size_t>{2, 3}));
}

// Property: stats agree with a direct recursive computation.
TEST(TreeStats, HeightMatchesRecursion) {
  RandomStream rng(12);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 300);
    const auto tree = build_random(n, rng);
    const auto st = tree_stats(tree);
    EXPECT_EQ(st.height, depth_below(tree, NodeRef::internal(tree.root())));
    std::size_t pairs = 0;
    for (std::size_t k = 0; k < tree.internal_count(); ++k) pairs += tree.is_leaf_pair(k);
    EXPECT_EQ(st.leaf_pair_count, pairs);
    EXPECT_EQ(st.n_tilde, n - pairs - 1);
  }
}

// Property: in one precision the weighted height is h u^2.
TEST(TreeStats, MonoWeightedHeightIsHeightTimesUSquared) {
  RandomStream rng(13);
  for (int t : {8, 11, 24}) {
    const Precision p(t);
    const double u = p.unit_roundoff();
    for (int i = 0; i < 30; ++i) {
      const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 500);
      const auto st = tree_stats(build_random(n, rng, p));
      EXPECT_DOUBLE_EQ(st.weighted_height, static_cast<double>(st.height) * u * u);
      EXPECT_EQ(st.height_by_precision.at(t), st.height);
    }
  }
}

TEST(Validation, RejectsMalformedTrees) {
  const Precision p(11);
  EXPECT_THROW(CompTree(3, {{NodeRef::leaf(0), NodeRef::leaf(1), p}}), std::invalid_argument);
  EXPECT_THROW(CompTree(3, {{NodeRef::leaf(0), NodeRef::leaf(0), p}, {NodeRef::internal(0), NodeRef::leaf(2), p}}),
               std::invalid_argument);
  EXPECT_THROW(CompTree(3, {{NodeRef::internal(1), NodeRef::leaf(0), p}, {NodeRef::leaf(1), NodeRef::leaf(2), p}}),
               std::invalid_argument);
  EXPECT_THROW(CompTree(2, {{NodeRef::leaf(0), NodeRef::leaf(5), p}}), std::invalid_argument);
  EXPECT_THROW(CompTree(1, {}), std::invalid_argument);
}

TEST(Parents, AreConsistent) {
  const auto tree = build_pairwise(7);
  EXPECT_FALSE(tree.parent(tree.root()).has_value());
  for (std::size_t k = 0; k + 1 < tree.internal_count(); ++k) {
    const auto p = tree.parent(k);
    ASSERT_TRUE(p.has_value());
    const auto& node = tree.node(*p);
    EXPECT_TRUE(node.left == NodeRef::internal(k) || node.right == NodeRef::internal(k));
  }
  for (std::size_t i = 0; i < 7; ++i) {
    const auto& node = tree.node(tree.leaf_parent(i));
    EXPECT_TRUE(node.left == NodeRef::leaf(i) || node.right == NodeRef::leaf(i));
  }
}

TEST(Fabsum, HeightsPerPrecision) {
  const Precision lo(11), hi(24);
  const auto tree = build_fabsum(10000, 32, sequential_builder(), sequential_builder(), lo, hi);
  EXPECT_EQ(tree.internal_count(), 9999u);
  const auto st = tree_stats(tree);
  // 313 blocks (the last holds 16 inputs): 31 low-precision additions below
  // 312 high-precision ones on the longest path.
  EXPECT_EQ(st.height_by_precision.at(11), 31u);
  EXPECT_EQ(st.height_by_precision.at(24), 312u);
  EXPECT_EQ(st.height, 343u);
  const double ul = lo.unit_roundoff(), uh = hi.unit_roundoff();
  EXPECT_DOUBLE_EQ(st.weighted_height, 31 * ul * ul + 312 * uh * uh);
  EXPECT_FALSE(tree.is_mono_precision());
  EXPECT_EQ(tree.coarsest_leaf_precision(), lo);
}

TEST(Fabsum, RaggedAndDegenerateBlocks) {
  const Precision lo(11), hi(24);
  // Blocks 32, 32, 1: the single input goes straight to the outer sum.
  const auto ragged = build_fabsum(65, 32, sequential_builder(), sequential_builder(), lo, hi);
  EXPECT_EQ(ragged.internal_count(), 64u);
  EXPECT_EQ(ragged.node(ragged.leaf_parent(64)).precision, hi);
  // One block: only low-precision nodes.
  const auto single = build_fabsum(20, 32, sequential_builder(), sequential_builder(), lo, hi);
  EXPECT_TRUE(single.is_mono_precision());
  EXPECT_EQ(single.node(0).precision, lo);
  // Block size 1: everything is summed in high precision.
  const auto unit = build_fabsum(10, 1, sequential_builder(), sequential_builder(), lo, hi);
  EXPECT_TRUE(unit.is_mono_precision());
  EXPECT_EQ(unit.node(0).precision, hi);
  EXPECT_THROW(build_fabsum(10, 0, sequential_builder(), sequential_builder(), lo, hi), std::invalid_argument);
}

TEST(PartialSums, ExactOnIntegers) {
  const auto tree = build_pairwise(5);
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const auto s = exact_partial_sums(tree, x);
  EXPECT_EQ(s.back().value(), 15.0);
  EXPECT_EQ(s[0].value(), 3.0);
  EXPECT_THROW(exact_partial_sums(tree, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST(PartialSums, DoubleDoubleKeepsTinyTerms) {
  const auto tree = build_sequential(3);
  const std::vector<double> x = {1.0, std::ldexp(1.0, -80), -1.0};
  EXPECT_EQ(exact_partial_sums(tree, x).back().value(), std::ldexp(1.0, -80));
}

TEST(TextFormat, RoundTrip) {
  RandomStream rng(8);
  const auto tree = build_fabsum(37, 8, pairwise_builder(), sequential_builder(), Precision(8), Precision(24));
  std::stringstream ss;
  write_tree(ss, tree);
  const auto back = read_tree(ss);
  ASSERT_EQ(back.leaf_count(), tree.leaf_count());
  for (std::size_t k = 0; k < tree.internal_count(); ++k) {
    EXPECT_EQ(back.node(k).left, tree.node(k).left);
    EXPECT_EQ(back.node(k).right, tree.node(k).right);
    EXPECT_EQ(back.node(k).precision, tree.node(k).precision);
  }
}

TEST(TextFormat, ParsesHandWrittenTree) {
  std::istringstream in("# ((x1 + x2) + (x3 + x4))\n2 x1 x2 11\n3 x3 x4 11  # right pair\n\n4 s2 s3 24\n");
  const auto tree = read_tree(in);
  EXPECT_EQ(tree.leaf_count(), 4u);
  EXPECT_EQ(tree_stats(tree).height, 2u);
  EXPECT_EQ(tree.node(2).precision, Precision(24));
  EXPECT_EQ(format_ref(tree.node(2).left), "s2");
}

TEST(TextFormat, RejectsBadInput) {
  std::istringstream bad_ref("2 x1 y2 11\n");
  EXPECT_THROW(read_tree(bad_ref), std::runtime_error);
  std::istringstream bad_order("3 x1 x2 11\n");
  EXPECT_THROW(read_tree(bad_order), std::runtime_error);
  std::istringstream missing_leaf("2 x1 x3 11\n");
  EXPECT_THROW(read_tree(missing_leaf), std::exception);
  std::istringstream empty("# nothing\n");
  EXPECT_THROW(read_tree(empty), std::runtime_error);
  std::istringstream bad_precision("2 x1 x2 60\n");
  EXPECT_THROW(read_tree(bad_precision), std::invalid_argument);
}

TEST(WithPrecision, ReplacesEveryNode) {
  const auto tree = build_fabsum(100, 10, sequential_builder(), sequential_builder(), Precision(8), Precision(24));
  const auto mono = tree.with_precision(Precision(11));
  EXPECT_TRUE(mono.is_mono_precision());
  EXPECT_EQ(mono.node(0).precision, Precision(11));
}

}  // namespace
}  // namespace sumerr
