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

// Computational trees for pairwise summation.
//
// A tree over n inputs has n leaves and n - 1 internal (sum) nodes. Internal
// nodes are stored in topological order: a node's internal children always
// have smaller indices, and the root is the last internal node. Indices are
// zero-based in code; the text format uses x1..xn for leaves and s2..sn for
// internal nodes.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sumerr/double_double.hpp"
#include "sumerr/precision.hpp"

namespace sumerr {

struct NodeRef {
  enum class Kind { Leaf, Internal };
  Kind kind = Kind::Leaf;
  std::size_t index = 0;

  static constexpr NodeRef leaf(std::size_t i) { return {Kind::Leaf, i}; }
  static constexpr NodeRef internal(std::size_t i) { return {Kind::Internal, i}; }
  constexpr bool is_leaf() const { return kind == Kind::Leaf; }

  friend constexpr bool operator==(const NodeRef&, const NodeRef&) = default;
};

struct InternalNode {
  NodeRef left;
  NodeRef right;
  Precision precision;
};

class CompTree {
 public:
  /// Validates structure: every leaf and every non-root internal node has
  /// exactly one parent, and children precede parents.
  CompTree(std::size_t leaf_count, std::vector<InternalNode> nodes)
      : leaf_count_(leaf_count), nodes_(std::move(nodes)) {
    validate();
  }

  std::size_t leaf_count() const { return leaf_count_; }
  std::size_t internal_count() const { return nodes_.size(); }
  std::size_t root() const { return nodes_.size() - 1; }
  const InternalNode& node(std::size_t i) const { return nodes_.at(i); }
  std::span<const InternalNode> nodes() const { return nodes_; }

  /// Parent internal index of leaf i; std::nullopt never happens for leaves.
  std::size_t leaf_parent(std::size_t i) const { return leaf_parent_.at(i); }
  /// Parent of internal node i, or nullopt for the root.
  std::optional<std::size_t> parent(std::size_t i) const {
    if (i == root()) return std::nullopt;
    return internal_parent_.at(i);
  }

  bool is_leaf_pair(std::size_t i) const {
    return nodes_[i].left.is_leaf() && nodes_[i].right.is_leaf();
  }

  bool is_mono_precision() const {
    return std::all_of(nodes_.begin(), nodes_.end(),
                       [&](const InternalNode& n) { return n.precision == nodes_[0].precision; });
  }

  /// Coarsest precision among nodes that read a leaf directly.
  Precision coarsest_leaf_precision() const {
    Precision coarsest(Precision::kMaxBits);
    for (std::size_t i = 0; i < leaf_count_; ++i) {
      coarsest = std::min(coarsest, nodes_[leaf_parent_[i]].precision);
    }
    return coarsest;
  }

  /// Same tree with every node in precision p.
  CompTree with_precision(Precision p) const {
    auto copy = nodes_;
    for (auto& n : copy) n.precision = p;
    return CompTree(leaf_count_, std::move(copy));
  }

 private:
  void validate() {
    if (leaf_count_ < 2) throw std::invalid_argument("a computational tree needs at least 2 leaves");
    if (nodes_.size() != leaf_count_ - 1) {
      throw std::invalid_argument("tree over " + std::to_string(leaf_count_) + " leaves needs " +
                                  std::to_string(leaf_count_ - 1) + " internal nodes, got " +
                                  std::to_string(nodes_.size()));
    }
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    leaf_parent_.assign(leaf_count_, kNone);
    internal_parent_.assign(nodes_.size(), kNone);
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      for (const NodeRef& c : {nodes_[k].left, nodes_[k].right}) {
        if (c.is_leaf()) {
          if (c.index >= leaf_count_) throw std::invalid_argument("leaf index out of range");
          if (leaf_parent_[c.index] != kNone) throw std::invalid_argument("leaf used twice");
          leaf_parent_[c.index] = k;
        } else {
          if (c.index >= k) throw std::invalid_argument("internal nodes must follow topological order");
          if (internal_parent_[c.index] != kNone) throw std::invalid_argument("internal node used twice");
          internal_parent_[c.index] = k;
        }
      }
    }
    // n leaves + (n - 2) non-root internal nodes account for all 2(n - 1)
    // child slots, so with no duplicates every vertex has exactly one parent.
  }

  std::size_t leaf_count_;
  std::vector<InternalNode> nodes_;
  std::vector<std::size_t> leaf_parent_;
  std::vector<std::size_t> internal_parent_;
};

using TreeBuilder = std::function<CompTree(std::size_t, Precision)>;

inline CompTree build_sequential(std::size_t n, Precision p = Precision::half()) {
  if (n < 2) throw std::invalid_argument("sequential summation needs n >= 2");
  std::vector<InternalNode> nodes;
  nodes.reserve(n - 1);
  nodes.push_back({NodeRef::leaf(0), NodeRef::leaf(1), p});
  for (std::size_t k = 2; k < n; ++k) {
    nodes.push_back({NodeRef::internal(k - 2), NodeRef::leaf(k), p});
  }
  return CompTree(n, std::move(nodes));
}

/// Level-by-level pairing, left to right; an unpaired element moves up as is.
inline CompTree build_pairwise(std::size_t n, Precision p = Precision::half()) {
  if (n < 2) throw std::invalid_argument("pairwise summation needs n >= 2");
  std::vector<InternalNode> nodes;
  nodes.reserve(n - 1);
  std::vector<NodeRef> level;
  level.reserve(n);
  for (std::size_t i = 0; i < n; ++i) level.push_back(NodeRef::leaf(i));
  while (level.size() > 1) {
    std::vector<NodeRef> next;
    next.reserve(level.size() / 2 + 1);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
      nodes.push_back({level[i], level[i + 1], p});
      next.push_back(NodeRef::internal(nodes.size() - 1));
    }
    if (level.size() % 2 == 1) next.push_back(level.back());
    level = std::move(next);
  }
  return CompTree(n, std::move(nodes));
}

/// Merges two uniformly chosen members of the current forest until one
/// tree remains. Every binary tree shape over n leaves has positive
/// probability.
inline CompTree build_random(std::size_t n, RandomStream& rng, Precision p = Precision::half()) {
  if (n < 2) throw std::invalid_argument("random tree needs n >= 2");
  std::vector<NodeRef> forest;
  forest.reserve(n);
  for (std::size_t i = 0; i < n; ++i) forest.push_back(NodeRef::leaf(i));
  std::vector<InternalNode> nodes;
  nodes.reserve(n - 1);
  auto take = [&](std::size_t bound) {
    const auto idx = std::min(bound - 1, static_cast<std::size_t>(rng.uniform() * bound));
    const NodeRef r = forest[idx];
    forest[idx] = forest.back();
    forest.pop_back();
    return r;
  };
  while (forest.size() > 1) {
    const NodeRef a = take(forest.size());
    const NodeRef b = take(forest.size());
    nodes.push_back({a, b, p});
    forest.push_back(NodeRef::internal(nodes.size() - 1));
  }
  return CompTree(n, std::move(nodes));
}

inline TreeBuilder sequential_builder() {
  return [](std::size_t n, Precision p) { return build_sequential(n, p); };
}
inline TreeBuilder pairwise_builder() {
  return [](std::size_t n, Precision p) { return build_pairwise(n, p); };
}

/// Block summation: consecutive blocks of b inputs are reduced by `inner` in
/// precision lo, the block results by `outer` in precision hi. When b does
/// not divide n the last block holds n mod b inputs. Blocks of one input and
/// a single block contribute no nodes.
inline CompTree build_fabsum(std::size_t n, std::size_t b, const TreeBuilder& inner,
                             const TreeBuilder& outer, Precision lo, Precision hi) {
  if (n < 2) throw std::invalid_argument("block summation needs n >= 2");
  if (b < 1) throw std::invalid_argument("block size must be >= 1");
  std::vector<InternalNode> nodes;
  nodes.reserve(n - 1);
  std::vector<NodeRef> block_results;

  // Append `sub` with its leaves mapped onto `operands`.
  auto splice = [&](const CompTree& sub, std::span<const NodeRef> operands) {
    const std::size_t offset = nodes.size();
    auto map = [&](NodeRef r) {
      return r.is_leaf() ? operands[r.index] : NodeRef::internal(r.index + offset);
    };
    for (const auto& node : sub.nodes()) nodes.push_back({map(node.left), map(node.right), node.precision});
    return NodeRef::internal(nodes.size() - 1);
  };

  for (std::size_t start = 0; start < n; start += b) {
    const std::size_t len = std::min(b, n - start);
    if (len == 1) {
      block_results.push_back(NodeRef::leaf(start));
      continue;
    }
    std::vector<NodeRef> operands;
    operands.reserve(len);
    for (std::size_t i = 0; i < len; ++i) operands.push_back(NodeRef::leaf(start + i));
    block_results.push_back(splice(inner(len, lo), operands));
  }
  if (block_results.size() > 1) splice(outer(block_results.size(), hi), block_results);
  return CompTree(n, std::move(nodes));
}

struct TreeStats {
  std::size_t height = 0;
  std::size_t leaf_pair_count = 0;  // L
  std::size_t n_tilde = 0;          // n - L - 1
  double weighted_height = 0.0;     // max over all vertices of the ancestor sum of u^2
  std::vector<std::size_t> node_height;   // per internal node
  std::vector<std::size_t> node_depth;    // number of strict ancestors, per internal node
  std::vector<double> weighted_depth;     // per internal node: sum of u_l^2 over strict ancestors
  /// For each precision, the largest number of nodes in that precision on any
  /// root-to-leaf path.
  std::map<int, std::size_t> height_by_precision;
};

inline TreeStats tree_stats(const CompTree& tree) {
  TreeStats st;
  const std::size_t m = tree.internal_count();
  st.node_height.assign(m, 0);
  st.node_depth.assign(m, 0);
  st.weighted_depth.assign(m, 0.0);

  std::map<int, std::vector<std::size_t>> per_precision;
  for (const auto& node : tree.nodes()) per_precision.try_emplace(node.precision.bits());
  for (auto& [bits, counts] : per_precision) counts.assign(m, 0);

  for (std::size_t k = 0; k < m; ++k) {
    const auto& node = tree.node(k);
    std::size_t h = 0;
    for (const NodeRef& c : {node.left, node.right}) {
      if (!c.is_leaf()) h = std::max(h, st.node_height[c.index]);
    }
    st.node_height[k] = h + 1;
    if (tree.is_leaf_pair(k)) ++st.leaf_pair_count;
    for (auto& [bits, counts] : per_precision) {
      std::size_t below = 0;
      for (const NodeRef& c : {node.left, node.right}) {
        if (!c.is_leaf()) below = std::max(below, counts[c.index]);
      }
      counts[k] = below + (node.precision.bits() == bits ? 1 : 0);
    }
  }
  st.height = st.node_height[tree.root()];
  st.n_tilde = tree.leaf_count() - st.leaf_pair_count - 1;

  // Depths top-down: reverse topological order visits parents first.
  double max_weighted = 0.0;
  for (std::size_t k = m; k-- > 0;) {
    if (auto p = tree.parent(k)) {
      const double up = tree.node(*p).precision.unit_roundoff();
      st.node_depth[k] = st.node_depth[*p] + 1;
      st.weighted_depth[k] = st.weighted_depth[*p] + up * up;
    }
    // A leaf child sits one level deeper than k and sees k as an ancestor.
    const double uk = tree.node(k).precision.unit_roundoff();
    const double below = st.weighted_depth[k] + uk * uk;
    const auto& node = tree.node(k);
    if (node.left.is_leaf() || node.right.is_leaf()) max_weighted = std::max(max_weighted, below);
    max_weighted = std::max(max_weighted, st.weighted_depth[k]);
  }
  st.weighted_height = max_weighted;
  for (auto& [bits, counts] : per_precision) st.height_by_precision[bits] = counts[tree.root()];
  return st;
}

/// Exact partial sums s_k over the leaves below each internal node.
inline std::vector<DoubleDouble> exact_partial_sums(const CompTree& tree, std::span<const double> x) {
  if (x.size() != tree.leaf_count()) {
    throw std::invalid_argument("input length " + std::to_string(x.size()) +
                                " does not match tree with " + std::to_string(tree.leaf_count()) +
                                " leaves");
  }
  std::vector<DoubleDouble> s(tree.internal_count());
  auto value = [&](NodeRef r) { return r.is_leaf() ? DoubleDouble(x[r.index]) : s[r.index]; };
  for (std::size_t k = 0; k < s.size(); ++k) {
    s[k] = value(tree.node(k).left) + value(tree.node(k).right);
  }
  return s;
}

// Text format: one line per internal node in topological order,
//     k left right precision_t
// with k = 2..n, children written as xI (leaf I, 1-based) or sJ (internal
// node J, 2-based). '#' starts a comment.

inline std::string format_ref(NodeRef r) {
  return r.is_leaf() ? "x" + std::to_string(r.index + 1) : "s" + std::to_string(r.index + 2);
}

inline void write_tree(std::ostream& os, const CompTree& tree) {
  os << "# sumerr computational tree, n = " << tree.leaf_count() << "\n";
  for (std::size_t k = 0; k < tree.internal_count(); ++k) {
    const auto& node = tree.node(k);
    os << (k + 2) << ' ' << format_ref(node.left) << ' ' << format_ref(node.right) << ' '
       << node.precision.bits() << '\n';
  }
}

inline CompTree read_tree(std::istream& is) {
  std::vector<InternalNode> nodes;
  std::size_t max_leaf = 0;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("tree line " + std::to_string(line_no) + ": " + what);
  };
  auto parse_ref = [&](const std::string& tok) -> NodeRef {
    if (tok.size() < 2 || (tok[0] != 'x' && tok[0] != 's')) fail("bad child reference '" + tok + "'");
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(tok.substr(1), &pos);
    } catch (const std::exception&) {
      fail("bad child reference '" + tok + "'");
    }
    if (pos != tok.size() - 1) fail("bad child reference '" + tok + "'");
    if (tok[0] == 'x') {
      if (v < 1) fail("leaf indices start at 1");
      max_leaf = std::max<std::size_t>(max_leaf, v);
      return NodeRef::leaf(v - 1);
    }
    if (v < 2) fail("internal indices start at 2");
    return NodeRef::internal(v - 2);
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string k_tok, l_tok, r_tok;
    int bits = 0;
    if (!(ls >> k_tok)) continue;
    if (!(ls >> l_tok >> r_tok >> bits)) fail("expected 'k left right precision_t'");
    if (k_tok != std::to_string(nodes.size() + 2)) fail("nodes must be numbered 2, 3, ... in order");
    nodes.push_back({parse_ref(l_tok), parse_ref(r_tok), Precision(bits)});
  }
  if (nodes.empty()) throw std::runtime_error("tree description has no nodes");
  if (max_leaf != nodes.size() + 1) {
    throw std::runtime_error("tree with " + std::to_string(nodes.size()) +
                             " internal nodes must reference leaves x1..x" +
                             std::to_string(nodes.size() + 1));
  }
  const std::size_t leaves = nodes.size() + 1;
  return CompTree(leaves, std::move(nodes));
}

}  // namespace sumerr
