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

#include <cfenv>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "sumerr/precision.hpp"

namespace sumerr {
namespace {

// Independent reference: scale the frexp mantissa to an integer grid and let
// the hardware round to nearest even.
double reference_rtn(double x, int t) {
  if (x == 0.0) return 0.0;
  int e = 0;
  const double m = std::frexp(x, &e);  // x = m 2^e, 0.5 <= |m| < 1
  const int old = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const double r = std::nearbyint(std::ldexp(m, t));
  std::fesetround(old);
  return std::ldexp(r, e - t);
}

TEST(Precision, ValidatesBits) {
  EXPECT_THROW(Precision(0), std::invalid_argument);
  EXPECT_THROW(Precision(53), std::invalid_argument);
  EXPECT_NO_THROW(Precision(1));
  EXPECT_NO_THROW(Precision(52));
  EXPECT_EQ(Precision::half().bits(), 11);
  EXPECT_EQ(Precision::bfloat16().bits(), 8);
  EXPECT_EQ(Precision::single().bits(), 24);
}

TEST(Precision, UnitRoundoff) {
  EXPECT_EQ(Precision(11).unit_roundoff(), std::ldexp(1.0, -11));
  EXPECT_EQ(Precision(24).unit_roundoff(), std::ldexp(1.0, -24));
  EXPECT_EQ(roundoff_bound(Precision(11), RoundingMode::NearestTiesEven), std::ldexp(1.0, -11));
  EXPECT_EQ(roundoff_bound(Precision(11), RoundingMode::Stochastic), std::ldexp(1.0, -10));
}

TEST(Precision, ParsesModes) {
  EXPECT_EQ(parse_rounding_mode("rtn"), RoundingMode::NearestTiesEven);
  EXPECT_EQ(parse_rounding_mode("sr"), RoundingMode::Stochastic);
  EXPECT_EQ(to_string(RoundingMode::Stochastic), "sr");
  EXPECT_THROW(parse_rounding_mode("up"), std::invalid_argument);
}

TEST(RoundNearest, TiesGoToEven) {
  const Precision p(11);  // spacing 2^-10 in [1, 2)
  EXPECT_EQ(round_value(1.0 + std::ldexp(1.0, -11), p, RoundingMode::NearestTiesEven), 1.0);
  EXPECT_EQ(round_value(1.0 + 3 * std::ldexp(1.0, -11), p, RoundingMode::NearestTiesEven),
            1.0 + std::ldexp(1.0, -9));
  EXPECT_EQ(round_value(2049.0, p, RoundingMode::NearestTiesEven), 2048.0);
  EXPECT_EQ(round_value(2051.0, p, RoundingMode::NearestTiesEven), 2052.0);
}

TEST(RoundNearest, MatchesHardwareReference) {
  RandomStream rng(7);
  for (int t = 1; t <= 52; ++t) {
    const Precision p(t);
    for (int i = 0; i < 2000; ++i) {
      const double x = std::ldexp(rng.uniform() - 0.5, static_cast<int>(rng.uniform() * 80) - 40);
      ASSERT_EQ(round_value(x, p, RoundingMode::NearestTiesEven), reference_rtn(x, t)) << "t=" << t << " x=" << x;
    }
  }
}

TEST(RoundNearest, OddSymmetricAndMonotone) {
  const Precision p(8);
  double prev = round_value(-1.0, p, RoundingMode::NearestTiesEven);
  for (int i = 1; i <= 5000; ++i) {
    const double x = -1.0 + 2.0 * i / 5000.0;
    const double r = round_value(x, p, RoundingMode::NearestTiesEven);
    EXPECT_EQ(round_value(-x, p, RoundingMode::NearestTiesEven), -r);
    EXPECT_GE(r, prev);
    prev = r;
  }
}

TEST(RoundNearest, RepresentableValuesAreFixedPoints) {
  const Precision p(11);
  for (double v : {0.0, 1.0, -1.5, 2048.0, 1.0 + std::ldexp(1.0, -10), std::ldexp(1.0, -300)}) {
    EXPECT_TRUE(is_representable(v, p));
    EXPECT_EQ(round_value(v, p, RoundingMode::NearestTiesEven), v);
  }
  EXPECT_FALSE(is_representable(1.0 + std::ldexp(1.0, -11), p));
}

TEST(Stochastic, NoDrawForRepresentableValues) {
  RandomStream rng(1);
  const Precision p(11);
  EXPECT_EQ(round_value(1.5, p, RoundingMode::Stochastic, &rng), 1.5);
  EXPECT_EQ(rng.draws(), 0u);
  (void)round_value(1.0 + std::ldexp(1.0, -13), p, RoundingMode::Stochastic, &rng);
  EXPECT_EQ(rng.draws(), 1u);
}

TEST(Stochastic, UpProbabilityIsFractionalDistance) {
  // 1 + 2^-13 lies 1/4 of the way from 1 to 1 + 2^-11 at t = 12.
  RandomStream rng(11);
  const Precision p(12);
  const double x = 1.0 + std::ldexp(1.0, -13);
  const int trials = 40000;
  int up = 0;
  for (int i = 0; i < trials; ++i) {
    const double r = round_value(x, p, RoundingMode::Stochastic, &rng);
    ASSERT_TRUE(r == 1.0 || r == 1.0 + std::ldexp(1.0, -11));
    up += r > 1.0;
  }
  const double frac = static_cast<double>(up) / trials;
  EXPECT_NEAR(frac, 0.25, 4.0 * std::sqrt(0.25 * 0.75 / trials));
}

TEST(Stochastic, UnbiasedOnAverage) {
  RandomStream rng(5);
  const Precision p(8);
  const double x = 0.7123456789;
  const int trials = 50000;
  double sum = 0.0;
  for (int i = 0; i < trials; ++i) sum += round_value(x, p, RoundingMode::Stochastic, &rng);
  const double spacing = std::ldexp(1.0, -8);  // in [0.5, 1)
  EXPECT_NEAR(sum / trials, x, 4.0 * spacing / 2.0 / std::sqrt(trials));
}

TEST(Stochastic, RequiresStream) {
  EXPECT_THROW(round_value(1.1, Precision(11), RoundingMode::Stochastic), std::invalid_argument);
  EXPECT_THROW(emulated_add(1.0, 0.1, Precision(11), RoundingMode::Stochastic), std::invalid_argument);
}

TEST(Emulated, RejectsNonFinite) {
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(emulated_add(inf, 1.0, Precision(11), RoundingMode::NearestTiesEven), std::domain_error);
  EXPECT_THROW(emulated_mul(std::nan(""), 1.0, Precision(11), RoundingMode::NearestTiesEven), std::domain_error);
  EXPECT_THROW(round_value(inf, Precision(11), RoundingMode::NearestTiesEven), std::domain_error);
}

TEST(Emulated, MultiplyRoundsProduct) {
  const double a = 1.0 + std::ldexp(1.0, -10);
  // a^2 = 1 + 2^-9 + 2^-20; nearest at t = 11 is 1 + 2^-9.
  const auto r = emulated_mul(a, a, Precision(11), RoundingMode::NearestTiesEven);
  EXPECT_EQ(r.value, 1.0 + std::ldexp(1.0, -9));
  EXPECT_LT(r.record.delta, 0.0);
  EXPECT_LE(std::fabs(r.record.delta), std::ldexp(1.0, -11));
}

TEST(Emulated, JustBelowPowerOfTwo) {
  const double tiny = std::ldexp(1.0, -60);
  const auto r = emulated_add(2.0, -tiny, Precision(11), RoundingMode::NearestTiesEven);
  EXPECT_EQ(r.value, 2.0);
  EXPECT_GT(r.record.delta, 0.0);
  EXPECT_NEAR(r.record.delta, tiny / 2.0, 1e-3 * tiny);
}

// Property: every operation satisfies result = exact (1 + delta) with
// |delta| <= bound, and the result is representable.
TEST(Emulated, RoundoffRecordIsExactAndBounded) {
  RandomStream rng(99);
  RandomStream coin(100);
  for (int t : {2, 5, 8, 11, 24, 40, 52}) {
    const Precision p(t);
    for (RoundingMode mode : {RoundingMode::NearestTiesEven, RoundingMode::Stochastic}) {
      for (int i = 0; i < 3000; ++i) {
        const double a = round_value(std::ldexp(coin.uniform() - 0.3, static_cast<int>(coin.uniform() * 40) - 20), p,
                                     RoundingMode::NearestTiesEven);
        const double b = round_value(std::ldexp(coin.uniform() - 0.6, static_cast<int>(coin.uniform() * 40) - 20), p,
                                     RoundingMode::NearestTiesEven);
        const bool mul = i % 3 == 0;
        const auto r = mul ? emulated_mul(a, b, p, mode, &rng) : emulated_add(a, b, p, mode, &rng);
        const auto exact = mul ? two_prod(a, b) : two_sum(a, b);
        ASSERT_TRUE(is_representable(r.value, p));
        ASSERT_LE(std::fabs(r.record.delta), roundoff_bound(p, mode) * (1.0 + 1e-12));
        const DoubleDouble lhs = DoubleDouble(r.value) - DoubleDouble(exact.sum, exact.err);
        const DoubleDouble rhs = DoubleDouble(exact.sum, exact.err) * r.record.delta;
        ASSERT_LE(std::fabs((lhs - rhs).value()), 1e-14 * std::fabs(rhs.value()) + 1e-300);
      }
    }
  }
}

TEST(Emulated, ExactResultsHaveZeroDelta) {
  const auto r = emulated_add(1.0, 2.0, Precision(11), RoundingMode::NearestTiesEven);
  EXPECT_EQ(r.value, 3.0);
  EXPECT_EQ(r.record.delta, 0.0);
  EXPECT_EQ(emulated_sub(1.0, 1.0, Precision(11), RoundingMode::NearestTiesEven).value, 0.0);
}

TEST(Seeds, MixIsDeterministicAndSpreads) {
  EXPECT_EQ(mix_seed(1), mix_seed(1));
  EXPECT_NE(mix_seed(1), mix_seed(2));
  RandomStream a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    const double v = a.uniform();
    EXPECT_EQ(v, b.uniform());
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

}  // namespace
}  // namespace sumerr
