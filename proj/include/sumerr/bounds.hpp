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

// Deterministic and probabilistic forward-error bounds for summation.
//
// Every function takes the unit roundoff explicitly. Callers validating
// stochastic rounding pass 2u, since a stochastically rounded operation is
// only bounded by |delta| <= 2u.
//
// Probabilistic bounds hold with probability at least 1 - (delta + eta):
// delta is charged to the first-order martingale, eta to the simultaneous
// control of all higher-order (child-error) terms.

#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sumerr/comp_tree.hpp"
#include "sumerr/double_double.hpp"

namespace sumerr {

struct ProbBudget {
  double delta = 1e-2;
  double eta = 1e-3;

  void validate() const {
    if (!(delta > 0.0 && delta < 1.0) || !(eta > 0.0 && eta < 1.0) || !(delta + eta < 1.0)) {
      throw std::invalid_argument("failure probabilities need 0 < delta, eta and delta + eta < 1");
    }
  }
};

enum class BoundId {
  DetPartial,
  DetInputs,
  ProbRec,
  ProbClosedPartial,
  ProbClosedInputs,
  ShiftPartial,
  ShiftInputs,
  CompDetPartial,
  CompDetInputs,
  CompProbRec,
  CompProbPartial,
  CompProbInputs,
  MixRec,
  MixClosedPartial,
  MixClosedInputs,
  FabsumInputs,
  FabsumDetFirstOrder,
};

inline constexpr std::array<BoundId, 17> kAllBoundIds = {
    BoundId::DetPartial,     BoundId::DetInputs,        BoundId::ProbRec,
    BoundId::ProbClosedPartial, BoundId::ProbClosedInputs, BoundId::ShiftPartial,
    BoundId::ShiftInputs,    BoundId::CompDetPartial,   BoundId::CompDetInputs,
    BoundId::CompProbRec,    BoundId::CompProbPartial,  BoundId::CompProbInputs,
    BoundId::MixRec,         BoundId::MixClosedPartial, BoundId::MixClosedInputs,
    BoundId::FabsumInputs,   BoundId::FabsumDetFirstOrder,
};

inline std::string_view to_string(BoundId id) {
  switch (id) {
    case BoundId::DetPartial: return "DET_PARTIAL";
    case BoundId::DetInputs: return "DET_INPUTS";
    case BoundId::ProbRec: return "PROB_REC";
    case BoundId::ProbClosedPartial: return "PROB_CLOSED_PARTIAL";
    case BoundId::ProbClosedInputs: return "PROB_CLOSED_INPUTS";
    case BoundId::ShiftPartial: return "SHIFT_PARTIAL";
    case BoundId::ShiftInputs: return "SHIFT_INPUTS";
    case BoundId::CompDetPartial: return "COMP_DET_PARTIAL";
    case BoundId::CompDetInputs: return "COMP_DET_INPUTS";
    case BoundId::CompProbRec: return "COMP_PROB_REC";
    case BoundId::CompProbPartial: return "COMP_PROB_PARTIAL";
    case BoundId::CompProbInputs: return "COMP_PROB_INPUTS";
    case BoundId::MixRec: return "MIX_REC";
    case BoundId::MixClosedPartial: return "MIX_CLOSED_PARTIAL";
    case BoundId::MixClosedInputs: return "MIX_CLOSED_INPUTS";
    case BoundId::FabsumInputs: return "FABSUM_INPUTS";
    case BoundId::FabsumDetFirstOrder: return "FABSUM_DET_FIRSTORDER";
  }
  return "?";
}

/// Deterministic bounds always hold; the others are probabilistic.
inline bool is_deterministic(BoundId id) {
  return id == BoundId::DetPartial || id == BoundId::DetInputs;
}

class BoundReport {
 public:
  void set(BoundId id, double value) {
    if (std::isnan(value) || value < 0.0) {
      throw std::domain_error(std::string("bound ") + std::string(to_string(id)) + " is not a nonnegative number");
    }
    values_[id] = value;
  }
  bool has(BoundId id) const { return values_.contains(id); }
  double at(BoundId id) const { return values_.at(id); }
  const std::map<BoundId, double>& values() const { return values_; }
  void merge(const BoundReport& other) {
    for (const auto& [id, v] : other.values_) values_[id] = v;
  }

 private:
  std::map<BoundId, double> values_;
};

// Constants -----------------------------------------------------------------

/// sqrt(2 ln(2/delta)): the first-order Azuma-Hoeffding factor.
inline double first_order_factor(double delta) { return std::sqrt(2.0 * std::log(2.0 / delta)); }

/// lambda_{m,eta} = sqrt(2 ln(2m/eta)). For m = 0 there is nothing to
/// control and the factor is taken as 0.
inline double lambda_factor(double m, double eta) {
  if (m < 0.0) throw std::domain_error("lambda needs m >= 0");
  if (m == 0.0) return 0.0;
  const double arg = 2.0 * m / eta;
  if (arg <= 1.0) return 0.0;
  return std::sqrt(2.0 * std::log(arg));
}

/// phi = lambda sqrt(2h) u exp(lambda^2 h u^2).
inline double phi_factor(double lambda, double height, double u) {
  return lambda * std::sqrt(2.0 * height) * u * std::exp(lambda * lambda * height * u * u);
}

/// Mixed precision: weighted height h~ already carries the u^2 factors,
/// phi = lambda sqrt(2 h~) exp(lambda^2 h~). Reduces to phi_factor when
/// h~ = h u^2.
inline double phi_weighted(double lambda, double weighted_height) {
  return lambda * std::sqrt(2.0 * weighted_height) * std::exp(lambda * lambda * weighted_height);
}

inline double alpha_factor(double u) {
  const double a = 1.0 + u;
  const double beta = u * a * a;
  return std::sqrt(1.0 + 3.0 * a * a + 2.0 * a * a * a * a) / (1.0 - beta);
}

inline double gamma_factor(double n, double eta, double u) {
  const double lam = lambda_factor(n, eta);
  const double alpha = alpha_factor(u);
  return std::sqrt(1.0 + lam * lam * u * u) *
         (1.0 + lam * alpha * std::sqrt(2.0 * n) * u * u * std::exp(lam * lam * alpha * alpha * n * u * u * u * u));
}

struct Constants {
  double lambda_h = 0.0;        // (1 + u)^h
  double first_order = 0.0;     // sqrt(2 ln(2/delta))
  double lambda_n = 0.0;        // sqrt(2 ln(2n/eta))
  double lambda_n_tilde = 0.0;  // sqrt(2 ln(2 n~/eta))
  double phi_n = 0.0;           // phi_{n,h,eta}
  double phi_n_tilde = 0.0;     // phi_{n~,h,eta}
  double alpha = 0.0;
  double gamma = 0.0;
  double beta_aux = 0.0;        // u (1 + u)^2
};

inline Constants constants(double n, double n_tilde, double h, double u, const ProbBudget& budget) {
  budget.validate();
  if (n < 2.0) throw std::domain_error("constants need n >= 2");
  if (u <= 0.0 || u >= 1.0) throw std::domain_error("unit roundoff must lie in (0, 1)");
  Constants c;
  c.lambda_h = std::pow(1.0 + u, h);
  c.first_order = first_order_factor(budget.delta);
  c.lambda_n = lambda_factor(n, budget.eta);
  c.lambda_n_tilde = lambda_factor(n_tilde, budget.eta);
  c.phi_n = phi_factor(c.lambda_n, h, u);
  c.phi_n_tilde = phi_factor(c.lambda_n_tilde, h, u);
  c.alpha = alpha_factor(u);
  c.gamma = gamma_factor(n, budget.eta, u);
  c.beta_aux = u * (1.0 + u) * (1.0 + u);
  return c;
}

// Helpers ------------------------------------------------------------------

inline std::vector<double> to_doubles(std::span<const DoubleDouble> v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& d : v) out.push_back(d.value());
  return out;
}

namespace detail {

inline double sum_abs(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += std::fabs(x);
  return acc;
}

inline double norm2(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

inline void check_partials(const CompTree& tree, std::span<const double> s, std::span<const double> x) {
  if (s.size() != tree.internal_count() || x.size() != tree.leaf_count()) {
    throw std::invalid_argument("partial sums / inputs do not match the tree");
  }
}

inline void require_mono(const CompTree& tree) {
  if (!tree.is_mono_precision()) {
    throw std::invalid_argument("mono-precision bound requested for a mixed-precision tree; use mixed_bounds");
  }
}

}  // namespace detail

// General summation ---------------------------------------------------------

struct DetBounds {
  double partial = 0.0;  // lambda_h u sum |s_k|
  double inputs = 0.0;   // lambda_h h u sum |x_j|
};

inline DetBounds det_bounds(const CompTree& tree, std::span<const double> s, std::span<const double> x, double u) {
  detail::check_partials(tree, s, x);
  detail::require_mono(tree);
  const double h = static_cast<double>(tree_stats(tree).height);
  const double lam = std::pow(1.0 + u, h);
  return {lam * u * detail::sum_abs(s), lam * h * u * detail::sum_abs(x)};
}

enum class LambdaVariant {
  UseNTilde,  // lambda over nodes with a non-leaf child
  UseN,       // lambda over all n; needs no knowledge of L
};

/// Child-error bounds F_k: zero for nodes with two leaf children, otherwise
/// lambda u (sum over descendants j of (|s_j| + F_j)^2)^{1/2}.
inline std::vector<double> F_table(const CompTree& tree, std::span<const double> s, double eta,
                                   LambdaVariant variant, double u) {
  if (s.size() != tree.internal_count()) throw std::invalid_argument("partial sums do not match the tree");
  const auto st = tree_stats(tree);
  const double m = variant == LambdaVariant::UseN ? static_cast<double>(tree.leaf_count())
                                                  : static_cast<double>(st.n_tilde);
  const double lam = lambda_factor(m, eta);
  std::vector<double> F(tree.internal_count(), 0.0);
  std::vector<double> below(tree.internal_count(), 0.0);  // sum over descendants of (|s|+F)^2
  for (std::size_t k = 0; k < F.size(); ++k) {
    const auto& node = tree.node(k);
    double acc = 0.0;
    for (const NodeRef& c : {node.left, node.right}) {
      if (c.is_leaf()) continue;
      const double term = std::fabs(s[c.index]) + F[c.index];
      acc += below[c.index] + term * term;
    }
    below[k] = acc;
    F[k] = tree.is_leaf_pair(k) ? 0.0 : lam * u * std::sqrt(acc);
  }
  return F;
}

struct ProbBounds {
  double recurrence = 0.0;      // PROB_REC
  double closed_partial = 0.0;  // PROB_CLOSED_PARTIAL
  double closed_inputs = 0.0;   // PROB_CLOSED_INPUTS
};

inline ProbBounds prob_bounds_general(const CompTree& tree, std::span<const double> s, std::span<const double> x,
                                      double u, const ProbBudget& budget,
                                      LambdaVariant variant = LambdaVariant::UseN) {
  budget.validate();
  detail::check_partials(tree, s, x);
  detail::require_mono(tree);
  const auto st = tree_stats(tree);
  const double h = static_cast<double>(st.height);
  const double first = first_order_factor(budget.delta);
  const double m = variant == LambdaVariant::UseN ? static_cast<double>(tree.leaf_count())
                                                  : static_cast<double>(st.n_tilde);
  const double phi = phi_factor(lambda_factor(m, budget.eta), h, u);

  const auto F = F_table(tree, s, budget.eta, variant, u);
  double rec = 0.0;
  for (std::size_t k = 0; k < F.size(); ++k) {
    const double term = std::fabs(s[k]) + F[k];
    rec += term * term;
  }
  ProbBounds out;
  out.recurrence = u * first * std::sqrt(rec);
  out.closed_partial = u * first * (1.0 + phi) * detail::norm2(s);
  out.closed_inputs = u * std::sqrt(h) * first * (1.0 + phi) * detail::sum_abs(x);
  return out;
}

// Shifted summation ---------------------------------------------------------

struct ShiftBounds {
  double partial = 0.0;  // SHIFT_PARTIAL
  double inputs = 0.0;   // SHIFT_INPUTS
};

/// y holds x_k - c for k = 1..n followed by n c; t holds the exact partial
/// sums of the inner tree over y_1..y_n. h is the height of the whole
/// shifted computation (inner height + 2).
inline ShiftBounds shifted_bounds(std::span<const double> y, std::span<const double> t, double s_n,
                                  std::span<const double> x, double c, std::size_t h, double u,
                                  const ProbBudget& budget) {
  budget.validate();
  const std::size_t n = x.size();
  if (y.size() != n + 1 || t.size() + 1 != n) throw std::invalid_argument("shifted bound inputs have wrong sizes");
  const double first = first_order_factor(budget.delta);
  const double phi = phi_factor(lambda_factor(static_cast<double>(n), budget.eta), static_cast<double>(h), u);
  double sq = s_n * s_n;
  for (double v : t) sq += v * v;
  for (double v : y) sq += v * v;
  double spread = 0.0;
  for (double v : x) spread += std::fabs(v - c) + std::fabs(v);
  ShiftBounds out;
  out.partial = u * first * (1.0 + phi) * std::sqrt(sq);
  out.inputs = u * first * (1.0 + phi) * (static_cast<double>(n) * std::fabs(c) + std::sqrt(static_cast<double>(h)) * spread);
  return out;
}

/// Deterministic bounds for the whole shifted computation, which is itself
/// a tree of 2n + 1 operations and height h (inner height + 2): the n
/// subtractions, the inner sums, n c and the final addition.
inline ShiftBounds shifted_det_bounds(std::span<const double> y, std::span<const double> t, double s_n,
                                      std::span<const double> x, double c, std::size_t h, double u) {
  const std::size_t n = x.size();
  if (y.size() != n + 1 || t.size() + 1 != n) throw std::invalid_argument("shifted bound inputs have wrong sizes");
  const double hd = static_cast<double>(h);
  const double lam = std::pow(1.0 + u, hd);
  const double results = std::fabs(s_n) + detail::sum_abs(t) + detail::sum_abs(y);
  ShiftBounds out;
  out.partial = lam * u * results;
  out.inputs = lam * hd * u * (detail::sum_abs(x) + 2.0 * static_cast<double>(n) * std::fabs(c));
  return out;
}

// Compensated summation -----------------------------------------------------

struct CompensatedBounds {
  double det_partial = 0.0;   // COMP_DET_PARTIAL (to second order)
  double det_inputs = 0.0;    // COMP_DET_INPUTS (to second order)
  double prob_rec = 0.0;      // COMP_PROB_REC
  double prob_partial = 0.0;  // COMP_PROB_PARTIAL
  double prob_inputs = 0.0;   // COMP_PROB_INPUTS (to second order)
};

/// Bounds on the child errors of compensated summation: Y, S, Z, C per
/// step (entry i is step k = i + 1; entry 0 unused).
struct CompensatedChildBounds {
  std::vector<double> Y, S, Z, C;
};

/// s holds the exact partial sums s_2..s_n.
inline CompensatedChildBounds compensated_child_bounds(std::span<const double> x, std::span<const double> s,
                                                       double u, double eta) {
  const std::size_t n = x.size();
  if (n < 2 || s.size() + 1 != n) throw std::invalid_argument("compensated bound inputs have wrong sizes");
  auto sk = [&](std::size_t i) { return std::fabs(s[i - 1]); };  // |s_{i+1}|
  const double lam = lambda_factor(static_cast<double>(n), eta);
  CompensatedChildBounds b;
  for (auto* v : {&b.Y, &b.S, &b.Z, &b.C}) v->assign(n, 0.0);
  b.Z[1] = u * sk(1);
  b.C[1] = u * (std::fabs(x[1]) + b.Z[1]) + u * sk(1);
  double acc = 0.0;
  for (std::size_t i = 2; i < n; ++i) {
    b.Y[i] = b.C[i - 1] * (1.0 + u);
    const double a = std::fabs(x[i]) + b.Y[i];
    const double d = std::fabs(x[i - 1]) + b.Z[i - 1];
    acc += a * a + b.C[i - 1] * b.C[i - 1] + d * d;
    b.S[i] = lam * u * std::sqrt(acc);
    b.Z[i] = u * (sk(i) + b.S[i]) + u * (std::fabs(x[i]) + b.Y[i]) + b.Y[i];
    b.C[i] = u * (std::fabs(x[i]) + b.Z[i]) + u * (sk(i) + b.S[i]);
  }
  return b;
}

inline CompensatedBounds compensated_bounds(std::span<const double> x, std::span<const double> s, double u,
                                            const ProbBudget& budget) {
  budget.validate();
  const std::size_t n = x.size();
  if (n < 2 || s.size() + 1 != n) throw std::invalid_argument("compensated bound inputs have wrong sizes");
  const double nd = static_cast<double>(n);
  const double first = first_order_factor(budget.delta);
  const double s_n = std::fabs(s.back());

  double sum_abs_x_from2 = 0.0, sum_sq_x_from2 = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    sum_abs_x_from2 += std::fabs(x[i]);
    sum_sq_x_from2 += x[i] * x[i];
  }
  double sum_abs_s_inner = 0.0;  // s_2..s_{n-1}
  for (std::size_t i = 0; i + 1 < s.size(); ++i) sum_abs_s_inner += std::fabs(s[i]);
  double sum_sq_s = 0.0;  // s_2..s_n
  for (double v : s) sum_sq_s += v * v;
  const double sum_abs_x = detail::sum_abs(x);

  CompensatedBounds out;
  out.det_partial = u * s_n + 2.0 * u * (1.0 + 3.0 * u) * sum_abs_x_from2 + 4.0 * u * u * sum_abs_s_inner;
  out.det_inputs = (3.0 * u + (4.0 * nd - 2.0) * u * u) * sum_abs_x;

  const auto b = compensated_child_bounds(x, s, u, budget.eta);
  double rsq = 0.0;
  for (std::size_t i = 2; i < n; ++i) {
    const double a = std::fabs(x[i]) + b.Y[i];
    const double d = std::fabs(x[i - 1]) + b.Z[i - 1];
    rsq += a * a + b.C[i - 1] * b.C[i - 1] + d * d;
  }
  const double head = s_n + b.S[n - 1];
  out.prob_rec = u * first * std::sqrt(head * head + rsq);

  const double alpha = alpha_factor(u);
  const double gamma = gamma_factor(nd, budget.eta, u);
  out.prob_partial = u * first *
                     (s_n + gamma * (std::sqrt(2.0) + alpha * u) * std::sqrt(sum_sq_x_from2) +
                      gamma * alpha * u * std::sqrt(sum_sq_s));
  out.prob_inputs = u * first * (1.0 + std::sqrt(2.0) + std::sqrt(6.0) * (std::sqrt(nd) + 1.0) * u) * sum_abs_x;
  return out;
}

// Mixed precision -----------------------------------------------------------

struct MixedBounds {
  double recurrence = 0.0;      // MIX_REC
  double closed_partial = 0.0;  // MIX_CLOSED_PARTIAL
  double closed_inputs = 0.0;   // MIX_CLOSED_INPUTS
  double fabsum_inputs = 0.0;   // FABSUM_INPUTS
  std::optional<double> fabsum_det_first_order;  // FABSUM_DET_FIRSTORDER, needs a block size
  double weighted_height = 0.0;         // tree-derived h~
  double fabsum_weighted_height = 0.0;  // sum over precisions of h_p u_p^2
};

/// Each node uses its own unit roundoff times `u_scale` (2 for stochastic
/// rounding). With a block size b, also the first-order b u_lo sum |x|
/// bound, u_lo being the coarsest node precision.
inline MixedBounds mixed_bounds(const CompTree& tree, std::span<const double> s, std::span<const double> x,
                                const ProbBudget& budget, double u_scale = 1.0,
                                std::optional<std::size_t> block_size = std::nullopt) {
  budget.validate();
  detail::check_partials(tree, s, x);
  const std::size_t m = tree.internal_count();
  std::vector<double> u(m);
  double u_lo = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    u[k] = u_scale * tree.node(k).precision.unit_roundoff();
    u_lo = std::max(u_lo, u[k]);
  }
  const double lam = lambda_factor(static_cast<double>(tree.leaf_count()), budget.eta);
  const double first = first_order_factor(budget.delta);

  // F_k = lambda (sum_{j below k} u_j^2 (|s_j| + F_j)^2)^{1/2}
  std::vector<double> F(m, 0.0), below(m, 0.0);
  double rec = 0.0, weighted_sq = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const auto& node = tree.node(k);
    double acc = 0.0;
    for (const NodeRef& c : {node.left, node.right}) {
      if (c.is_leaf()) continue;
      const double term = u[c.index] * (std::fabs(s[c.index]) + F[c.index]);
      acc += below[c.index] + term * term;
    }
    below[k] = acc;
    F[k] = lam * std::sqrt(acc);
    const double term = u[k] * (std::fabs(s[k]) + F[k]);
    rec += term * term;
    weighted_sq += u[k] * u[k] * s[k] * s[k];
  }

  const auto st = tree_stats(tree);
  const double scale_sq = u_scale * u_scale;
  MixedBounds out;
  out.weighted_height = st.weighted_height * scale_sq;
  for (const auto& [bits, count] : st.height_by_precision) {
    const double up = u_scale * std::ldexp(1.0, -bits);
    out.fabsum_weighted_height += static_cast<double>(count) * up * up;
  }
  const double phi = phi_weighted(lam, out.weighted_height);
  const double phi_fab = phi_weighted(lam, out.fabsum_weighted_height);
  const double sum_abs_x = detail::sum_abs(x);

  out.recurrence = first * std::sqrt(rec);
  out.closed_partial = first * (1.0 + phi) * std::sqrt(weighted_sq);
  out.closed_inputs = std::sqrt(out.weighted_height) * first * (1.0 + phi) * sum_abs_x;
  out.fabsum_inputs = std::sqrt(out.fabsum_weighted_height) * first * (1.0 + phi_fab) * sum_abs_x;
  if (block_size) out.fabsum_det_first_order = static_cast<double>(*block_size) * u_lo * sum_abs_x;
  return out;
}

/// The block-summation weighted height b u_lo^2 + (n/b) u_hi^2 used for
/// plotting FABsum input bounds.
inline double fabsum_nominal_weighted_height(double n, double b, double u_lo, double u_hi) {
  return b * u_lo * u_lo + (n / b) * u_hi * u_hi;
}

}  // namespace sumerr
