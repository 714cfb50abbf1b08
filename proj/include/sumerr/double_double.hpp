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

#pragma once

#include <cmath>

namespace sumerr {

/// Error-free transformation: a + b == sum + err exactly.
struct TwoSumResult {
  double sum;
  double err;
};

inline TwoSumResult two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return {s, err};
}

/// Error-free product via fused multiply-add: a * b == prod + err exactly.
inline TwoSumResult two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

/// Unevaluated sum hi + lo with |lo| <= ulp(hi) / 2.
///
/// Used as the reference arithmetic for "exact" partial sums and for the
/// accumulations inside the error oracles. Relative accuracy is about
/// 2^-104, far below anything an emulated format with t <= 52 can resolve.
class DoubleDouble {
 public:
  constexpr DoubleDouble() = default;
  constexpr DoubleDouble(double v) : hi_(v) {}  // NOLINT(implicit)
  constexpr DoubleDouble(double hi, double lo) : hi_(hi), lo_(lo) {}

  constexpr double hi() const { return hi_; }
  constexpr double lo() const { return lo_; }
  double value() const { return hi_ + lo_; }

  DoubleDouble& operator+=(const DoubleDouble& o) {
    auto [s, e] = two_sum(hi_, o.hi_);
    auto [t, f] = two_sum(lo_, o.lo_);
    e += t;
    auto [s2, e2] = two_sum(s, e);
    e2 += f;
    auto [s3, e3] = two_sum(s2, e2);
    hi_ = s3;
    lo_ = e3;
    return *this;
  }
  DoubleDouble& operator-=(const DoubleDouble& o) { return *this += -o; }
  DoubleDouble& operator*=(double b) {
    auto [p, e] = two_prod(hi_, b);
    e = std::fma(lo_, b, e);
    auto [s, f] = two_sum(p, e);
    hi_ = s;
    lo_ = f;
    return *this;
  }

  DoubleDouble operator-() const { return {-hi_, -lo_}; }

  friend DoubleDouble operator+(DoubleDouble a, const DoubleDouble& b) { return a += b; }
  friend DoubleDouble operator-(DoubleDouble a, const DoubleDouble& b) { return a -= b; }
  friend DoubleDouble operator*(DoubleDouble a, double b) { return a *= b; }
  friend DoubleDouble operator*(double b, DoubleDouble a) { return a *= b; }

 private:
  double hi_ = 0.0;
  double lo_ = 0.0;
};

inline DoubleDouble abs(const DoubleDouble& v) { return v.hi() < 0.0 ? -v : v; }

/// a - b rounded once to double, with a and b given in double-double.
inline double difference(const DoubleDouble& a, const DoubleDouble& b) { return (a - b).value(); }

}  // namespace sumerr
