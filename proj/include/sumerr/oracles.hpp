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

// Exact error identities replayed from traced roundoffs.
//
// All accumulations run in double-double. The identities are exact over the
// reals; what remains is the few-ulp uncertainty of each recorded roundoff.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "sumerr/comp_tree.hpp"
#include "sumerr/double_double.hpp"
#include "sumerr/kernels.hpp"

namespace sumerr {

/// |a - b| / max(|b|, floor * scale). The floor only matters when b is many
/// orders of magnitude below the terms that produced it.
inline double relative_deviation(double a, double b, double scale = 0.0) {
  constexpr double kScaleFloor = 0x1.0p-10;
  const double denom = std::max(std::fabs(b), kScaleFloor * std::fabs(scale));
  if (denom == 0.0) return a == b ? 0.0 : std::numeric_limits<double>::infinity();
  return std::fabs(a - b) / denom;
}

namespace detail {

inline void check_tree_run(const TracedRun& run, const CompTree& tree) {
  if (run.computed_partial.size() != tree.internal_count() ||
      run.exact_partial.size() != tree.internal_count() || run.inputs.size() != tree.leaf_count()) {
    throw std::invalid_argument("traced run does not belong to this tree");
  }
}

// log of prod_{k < j <= root} (1 + delta_j) for every internal node k.
inline std::vector<double> log_ancestor_products(const CompTree& tree, std::span<const double> delta) {
  std::vector<double> logp(tree.internal_count(), 0.0);
  for (std::size_t k = tree.internal_count(); k-- > 0;) {
    if (auto p = tree.parent(k)) logp[k] = logp[*p] + std::log1p(delta[*p]);
  }
  return logp;
}

}  // namespace detail

/// e_n = sum_k s_k delta_k prod_{k < j <= n} (1 + delta_j).
inline double error_via_local_products(const TracedRun& run, const CompTree& tree) {
  detail::check_tree_run(run, tree);
  const auto delta = run.node_deltas();
  const auto logp = detail::log_ancestor_products(tree, delta);
  DoubleDouble acc;
  for (std::size_t k = 0; k < delta.size(); ++k) {
    if (delta[k] == 0.0) continue;
    acc += run.exact_partial[k] * (delta[k] * std::exp(logp[k]));
  }
  return acc.value();
}

/// sum_k |s_k| |delta_k| prod |1 + delta_j|: the trace-level deterministic bound.
inline double trace_error_bound(const TracedRun& run, const CompTree& tree) {
  detail::check_tree_run(run, tree);
  const auto delta = run.node_deltas();
  const auto logp = detail::log_ancestor_products(tree, delta);
  double acc = 0.0;
  for (std::size_t k = 0; k < delta.size(); ++k) {
    acc += std::fabs(run.exact_partial[k].value()) * std::fabs(delta[k]) * std::exp(logp[k]);
  }
  return acc;
}

struct ChildErrorTable {
  std::vector<double> f;  // child-error per internal node
};

struct ChildRecurrenceResult {
  double error = 0.0;
  ChildErrorTable table;
};

/// Child errors f_k = sum over descendants j of (s_j + f_j) delta_j, built
/// bottom-up as the sum of the children's forward errors
/// e_c = f_c + (s_c + f_c) delta_c; returns sum_j (s_j + f_j) delta_j.
inline ChildRecurrenceResult error_via_child_recurrence(const TracedRun& run, const CompTree& tree) {
  detail::check_tree_run(run, tree);
  const auto delta = run.node_deltas();
  const std::size_t m = tree.internal_count();
  std::vector<DoubleDouble> f(m), e(m);
  DoubleDouble total;
  for (std::size_t k = 0; k < m; ++k) {
    const auto& node = tree.node(k);
    DoubleDouble fk;
    for (const NodeRef& c : {node.left, node.right}) {
      if (!c.is_leaf()) fk += e[c.index];
    }
    f[k] = fk;
    const DoubleDouble local = (run.exact_partial[k] + fk) * delta[k];
    e[k] = fk + local;
    total += local;
  }
  ChildRecurrenceResult out;
  out.error = total.value();
  out.table.f.reserve(m);
  for (const auto& v : f) out.table.f.push_back(v.value());
  return out;
}

/// sum_k s_k delta_k; differs from e_n by O(u^2).
inline double first_order_error(const TracedRun& run, const CompTree& tree) {
  detail::check_tree_run(run, tree);
  const auto delta = run.node_deltas();
  DoubleDouble acc;
  for (std::size_t k = 0; k < delta.size(); ++k) acc += run.exact_partial[k] * delta[k];
  return acc.value();
}

/// Scale for relative comparisons of tree identities: sum_k |s_k delta_k|.
inline double identity_scale(const TracedRun& run) {
  const auto delta = run.node_deltas();
  double acc = 0.0;
  for (std::size_t k = 0; k < delta.size(); ++k) acc += std::fabs(run.exact_partial[k].value() * delta[k]);
  return acc;
}

// Compensated summation --------------------------------------------------

/// Forward errors (single dot) and child errors (double dot) of compensated
/// summation. Entry i is step k = i + 1; entry 0 is unused.
struct CompensatedChildErrors {
  // Definitions evaluated from the computed values.
  std::vector<double> y_dot, s_dot, z_dot, c_dot;
  std::vector<double> y_child, s_child, z_child, c_child;
  // The same child errors rebuilt from the roundoffs alone.
  std::vector<double> y_child_rec, s_child_rec, z_child_rec, c_child_rec;
  // Magnitude of the terms behind each recurrence value.
  std::vector<double> y_scale, s_scale, z_scale, c_scale;

  double max_deviation = 0.0;  // worst relative_deviation over k >= 3
  bool base_case_exact = false;
  double base_case_deviation = 0.0;
};

inline CompensatedChildErrors compensated_child_errors(const CompensatedRun& cr) {
  const auto& ct = cr.steps;
  const auto& x = cr.run.inputs;
  const std::size_t n = ct.size();
  if (n < 2 || x.size() != n || cr.run.exact_partial.size() != n - 1) {
    throw std::invalid_argument("compensated trace is inconsistent");
  }
  // s[i] = exact s_{i+1}
  std::vector<DoubleDouble> s(n);
  s[0] = x[0];
  for (std::size_t i = 1; i < n; ++i) s[i] = cr.run.exact_partial[i - 1];

  CompensatedChildErrors out;
  for (auto* v : {&out.y_dot, &out.s_dot, &out.z_dot, &out.c_dot, &out.y_child, &out.s_child, &out.z_child,
                  &out.c_child, &out.y_child_rec, &out.s_child_rec, &out.z_child_rec, &out.c_child_rec,
                  &out.y_scale, &out.s_scale, &out.z_scale, &out.c_scale}) {
    v->assign(n, 0.0);
  }

  std::vector<DoubleDouble> s_dot(n);
  for (std::size_t i = 1; i < n; ++i) {
    s_dot[i] = DoubleDouble(ct.s[i]) - s[i];
    const DoubleDouble y_dot = DoubleDouble(ct.y[i]) - DoubleDouble(x[i]);
    const DoubleDouble z_dot = DoubleDouble(ct.z[i]) - DoubleDouble(x[i]);
    out.y_dot[i] = y_dot.value();
    out.s_dot[i] = s_dot[i].value();
    out.z_dot[i] = z_dot.value();
    out.c_dot[i] = ct.c[i];
    out.y_child[i] = -ct.c[i - 1];
    out.s_child[i] = (s_dot[i - 1] + y_dot).value();
    out.z_child[i] = (s_dot[i] - s_dot[i - 1]).value();
    out.c_child[i] = (z_dot - y_dot).value();
  }

  // Recurrences. Base case at k = 2 (i = 1).
  std::vector<DoubleDouble> yr(n), sr(n), zr(n), cr_(n);
  zr[1] = s[1] * ct.sigma[1];
  cr_[1] = (DoubleDouble(x[1]) + zr[1]) * ct.delta[1] + s[1] * ct.sigma[1];
  // Scales evaluate the same recurrences with absolute values throughout.
  auto mag = [](const DoubleDouble& v) { return std::fabs(v.value()); };
  out.z_scale[1] = mag(s[1]) * std::fabs(ct.sigma[1]);
  out.c_scale[1] = (std::fabs(x[1]) + out.z_scale[1]) * std::fabs(ct.delta[1]) + out.z_scale[1];

  DoubleDouble s_sum;
  double s_sum_scale = 0.0;
  for (std::size_t i = 2; i < n; ++i) {
    yr[i] = -(cr_[i - 1] + cr_[i - 1] * ct.beta[i - 1]);
    out.y_scale[i] = out.c_scale[i - 1] * (1.0 + std::fabs(ct.beta[i - 1]));

    const DoubleDouble t1 = (DoubleDouble(x[i]) + yr[i]) * ct.eta[i];
    const DoubleDouble t2 = cr_[i - 1] * ct.beta[i - 1];
    const DoubleDouble t3 = (DoubleDouble(x[i - 1]) + zr[i - 1]) * ct.delta[i - 1];
    const double t1_scale = (std::fabs(x[i]) + out.y_scale[i]) * std::fabs(ct.eta[i]);
    s_sum += t1 - t2 - t3;
    s_sum_scale += t1_scale + out.c_scale[i - 1] * std::fabs(ct.beta[i - 1]) +
                   (std::fabs(x[i - 1]) + out.z_scale[i - 1]) * std::fabs(ct.delta[i - 1]);
    sr[i] = s_sum;
    out.s_scale[i] = s_sum_scale;

    const DoubleDouble zs = (s[i] + sr[i]) * ct.sigma[i];
    const double zs_scale = (mag(s[i]) + out.s_scale[i]) * std::fabs(ct.sigma[i]);
    zr[i] = zs + t1 + yr[i];
    out.z_scale[i] = zs_scale + t1_scale + out.y_scale[i];

    const DoubleDouble cd = (DoubleDouble(x[i]) + zr[i]) * ct.delta[i];
    cr_[i] = cd + zs;
    out.c_scale[i] = (std::fabs(x[i]) + out.z_scale[i]) * std::fabs(ct.delta[i]) + zs_scale;
  }
  for (std::size_t i = 1; i < n; ++i) {
    out.y_child_rec[i] = yr[i].value();
    out.s_child_rec[i] = sr[i].value();
    out.z_child_rec[i] = zr[i].value();
    out.c_child_rec[i] = cr_[i].value();
  }

  out.base_case_exact = out.y_child[1] == 0.0 && out.s_child[1] == 0.0 && ct.eta[1] == 0.0;
  out.base_case_deviation = std::max(relative_deviation(out.z_child_rec[1], out.z_child[1]),
                                     relative_deviation(out.c_child_rec[1], out.c_child[1], out.c_scale[1]));
  for (std::size_t i = 2; i < n; ++i) {
    out.max_deviation = std::max({out.max_deviation,
                                  relative_deviation(out.y_child_rec[i], out.y_child[i], out.y_scale[i]),
                                  relative_deviation(out.s_child_rec[i], out.s_child[i], out.s_scale[i]),
                                  relative_deviation(out.z_child_rec[i], out.z_child[i], out.z_scale[i]),
                                  relative_deviation(out.c_child_rec[i], out.c_child[i], out.c_scale[i])});
  }
  return out;
}

/// Roundoffs of compensated summation, one entry per step as in
/// CompensatedTrace (entry 0 unused).
struct CompensatedRoundoffs {
  std::span<const double> eta, sigma, delta, beta;
};

/// Second-order expansion of the compensated summation error, with
/// mu_k = eta_k - delta_k (k < n) and mu_n = eta_n.
inline double compensated_second_order(CompensatedRoundoffs r, std::span<const double> x,
                                       std::span<const DoubleDouble> s_full) {
  const std::size_t n = x.size();
  if (n < 2 || s_full.size() != n) throw std::invalid_argument("inconsistent compensated data");
  auto mu = [&](std::size_t i) { return i + 1 == n ? r.eta[i] : r.eta[i] - r.delta[i]; };
  DoubleDouble sum_x_mu;
  for (std::size_t i = 1; i < n; ++i) sum_x_mu += DoubleDouble(x[i]) * mu(i);
  DoubleDouble acc = s_full[n - 1] * r.sigma[n - 1];
  acc += sum_x_mu + sum_x_mu * r.sigma[n - 1];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    acc -= s_full[i] * (r.sigma[i] * (mu(i + 1) + r.beta[i] + r.delta[i]));
    acc -= DoubleDouble(x[i]) * (r.delta[i] * (mu(i + 1) + r.beta[i] + r.eta[i]));
  }
  return acc.value();
}

inline std::vector<DoubleDouble> compensated_exact_prefix(const CompensatedRun& cr) {
  std::vector<DoubleDouble> s;
  s.reserve(cr.run.inputs.size());
  s.emplace_back(cr.run.inputs.front());
  for (const auto& v : cr.run.exact_partial) s.push_back(v);
  return s;
}

inline double compensated_second_order(const CompensatedRun& cr) {
  const auto& ct = cr.steps;
  return compensated_second_order({ct.eta, ct.sigma, ct.delta, ct.beta}, cr.run.inputs,
                                  compensated_exact_prefix(cr));
}

/// Checks |e_n| <= sum_k (3u + (4(n-k)+6)u^2 + C n u^3) |x_k|; the cubic
/// slack constant C stands in for the unspecified third-order term.
inline bool check_rho_bound(const CompensatedRun& cr, double u, double slack = 16.0) {
  const auto& x = cr.run.inputs;
  const double n = static_cast<double>(x.size());
  double bound = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    bound += (3.0 * u + (4.0 * (n - k) + 6.0) * u * u + slack * n * u * u * u) * std::fabs(x[i]);
  }
  return std::fabs(cr.run.error) <= bound;
}

// Perturbation models ------------------------------------------------------
//
// Replaying a summation with prescribed roundoffs in double-double gives the
// model's computed result without host rounding noise; used for
// order-of-convergence checks where the roundoff pattern is held fixed while
// u varies.

/// Computed sum minus exact sum for the tree with node roundoffs `delta`.
inline double model_tree_error(const CompTree& tree, std::span<const double> x, std::span<const double> delta) {
  const std::size_t m = tree.internal_count();
  if (delta.size() != m || x.size() != tree.leaf_count()) throw std::invalid_argument("model size mismatch");
  std::vector<DoubleDouble> computed(m);
  auto value = [&](NodeRef r) { return r.is_leaf() ? DoubleDouble(x[r.index]) : computed[r.index]; };
  for (std::size_t k = 0; k < m; ++k) {
    const DoubleDouble sum = value(tree.node(k).left) + value(tree.node(k).right);
    computed[k] = sum + sum * delta[k];
  }
  const auto exact = exact_partial_sums(tree, x);
  return (computed.back() - exact.back()).value();
}

/// Computed minus exact sum of compensated summation with the given step
/// roundoffs (entry i is step k = i + 1; eta[1] should be 0).
inline double model_compensated_error(std::span<const double> x, CompensatedRoundoffs r) {
  const std::size_t n = x.size();
  DoubleDouble s(x[0]), c, exact(x[0]);
  auto perturb = [](const DoubleDouble& v, double d) { return v + v * d; };
  for (std::size_t i = 1; i < n; ++i) {
    const DoubleDouble y = perturb(DoubleDouble(x[i]) - c, r.eta[i]);
    const DoubleDouble s_new = perturb(s + y, r.sigma[i]);
    const DoubleDouble z = perturb(s_new - s, r.delta[i]);
    c = perturb(z - y, r.beta[i]);
    s = s_new;
    exact += x[i];
  }
  return (s - exact).value();
}

}  // namespace sumerr
