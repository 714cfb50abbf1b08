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

// Reduced-precision arithmetic emulated inside IEEE double.
//
// A format keeps t significand bits (implicit leading bit included), so the
// spacing of representable numbers in [1, 2) is 2^(1-t) and the unit
// roundoff of round-to-nearest is u = 2^-t. The exponent range is unbounded:
// overflow, underflow and subnormals are not modelled.
//
// Every operation first forms the exact result as an unevaluated pair
// (hi, lo) using error-free transformations, then rounds that pair once.
// The recorded roundoff delta therefore satisfies
//     result == (x op y) * (1 + delta)
// to within a few host ulps of delta itself, for every t <= 52 and every
// exponent spread of the operands.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sumerr/double_double.hpp"

namespace sumerr {

class Precision {
 public:
  static constexpr int kMaxBits = 52;

  constexpr Precision() = default;
  explicit Precision(int significand_bits) : bits_(significand_bits) {
    if (bits_ < 1 || bits_ > kMaxBits) {
      throw std::invalid_argument("significand bits must lie in [1, 52], got " +
                                  std::to_string(bits_));
    }
  }

  static Precision half() { return Precision(11); }
  static Precision bfloat16() { return Precision(8); }
  static Precision single() { return Precision(24); }

  constexpr int bits() const { return bits_; }
  double unit_roundoff() const { return std::ldexp(1.0, -bits_); }

  friend constexpr bool operator==(Precision, Precision) = default;
  friend constexpr auto operator<=>(Precision, Precision) = default;

 private:
  int bits_ = 11;
};

enum class RoundingMode { NearestTiesEven, Stochastic };

inline std::string_view to_string(RoundingMode m) {
  return m == RoundingMode::NearestTiesEven ? "rtn" : "sr";
}

inline RoundingMode parse_rounding_mode(std::string_view s) {
  if (s == "rtn" || s == "nearest") return RoundingMode::NearestTiesEven;
  if (s == "sr" || s == "stochastic") return RoundingMode::Stochastic;
  throw std::invalid_argument("unknown rounding mode '" + std::string(s) + "'");
}

/// Worst-case |delta| of a single operation: u for RTN, 2u for SR.
inline double roundoff_bound(Precision p, RoundingMode mode) {
  return mode == RoundingMode::Stochastic ? 2.0 * p.unit_roundoff() : p.unit_roundoff();
}

/// splitmix64 finaliser; used to derive independent seeds from a master seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seeded 64-bit Mersenne twister with a platform-independent [0,1) draw.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    ++draws_;
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  std::mt19937_64& engine() { return engine_; }
  std::uint64_t draws() const { return draws_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

namespace detail {

// Round the exact real hi + lo (|lo| <= ulp(hi)/2) to t significand bits.
inline double round_pair(double hi, double lo, Precision p, RoundingMode mode,
                         RandomStream* rng) {
  if (hi == 0.0) return 0.0;
  const int t = p.bits();
  const double sign = hi < 0.0 ? -1.0 : 1.0;
  const double mag = std::fabs(hi);
  const double tail = lo * sign;  // magnitude is mag + tail

  int e = std::ilogb(mag);
  if (tail < 0.0 && mag == std::ldexp(1.0, e)) --e;  // just below a power of two
  const int shift = e - t + 1;                        // quantum is 2^shift

  double scaled = std::ldexp(mag, -shift);
  const double scaled_tail = std::ldexp(tail, -shift);
  double floor_part = std::floor(scaled);
  double frac = scaled - floor_part;  // exact
  bool adjusted = false;
  if (frac == 0.0 && scaled_tail < 0.0) {
    floor_part -= 1.0;
    frac = 1.0;
    adjusted = true;
  }
  if (frac == 0.0 && scaled_tail == 0.0) return hi;  // representable

  bool up = false;
  if (mode == RoundingMode::NearestTiesEven) {
    // Compare frac + scaled_tail with 1/2 without rounding.
    int cmp;
    if (adjusted) {
      cmp = scaled_tail > -0.5 ? 1 : (scaled_tail < -0.5 ? -1 : 0);
    } else if (frac != 0.5) {
      cmp = frac > 0.5 ? 1 : -1;
    } else {
      cmp = scaled_tail > 0.0 ? 1 : (scaled_tail < 0.0 ? -1 : 0);
    }
    up = cmp > 0 || (cmp == 0 && std::fmod(floor_part, 2.0) != 0.0);
  } else {
    if (rng == nullptr) throw std::invalid_argument("stochastic rounding requires a random stream");
    const double prob_up = frac + scaled_tail;
    up = rng->uniform() < prob_up;
  }
  return sign * std::ldexp(floor_part + (up ? 1.0 : 0.0), shift);
}

inline void require_finite(double x) {
  if (!std::isfinite(x)) throw std::domain_error("emulated arithmetic requires finite operands");
}

}  // namespace detail

/// Rounds x to p. Stochastic mode draws once from rng unless x is representable.
inline double round_value(double x, Precision p, RoundingMode mode, RandomStream* rng = nullptr) {
  detail::require_finite(x);
  if (mode == RoundingMode::Stochastic && rng == nullptr) {
    throw std::invalid_argument("stochastic rounding requires a random stream");
  }
  return detail::round_pair(x, 0.0, p, mode, rng);
}

inline bool is_representable(double x, Precision p) {
  return round_value(x, p, RoundingMode::NearestTiesEven) == x;
}

enum class OpRole {
  NodeSum,       // tree node addition
  ShiftSubtract, // x_k - c
  ShiftMultiply, // n * c
  ShiftCombine,  // t_n + n c
  CompY,         // eta_k:   y_k = x_k - c_{k-1}
  CompS,         // sigma_k: s_k = s_{k-1} + y_k
  CompZ,         // delta_k: z_k = s_k - s_{k-1}
  CompC,         // beta_k:  c_k = z_k - y_k
};

/// Realised relative error of one operation.
struct RoundoffRecord {
  double delta = 0.0;
  std::size_t op_id = 0;
  double bound = 0.0;
  OpRole role = OpRole::NodeSum;
};

struct OpResult {
  double value;
  RoundoffRecord record;
};

namespace detail {

inline OpResult finish(TwoSumResult exact, Precision p, RoundingMode mode, RandomStream* rng) {
  const double r = round_pair(exact.sum, exact.err, p, mode, rng);
  double delta = 0.0;
  if (exact.sum != 0.0) {
    // r - hi is exact (Sterbenz); one rounding remains in the numerator.
    delta = ((r - exact.sum) - exact.err) / exact.sum;
  }
  return {r, RoundoffRecord{delta, 0, roundoff_bound(p, mode), OpRole::NodeSum}};
}

inline void check_mode(RoundingMode mode, RandomStream* rng) {
  if (mode == RoundingMode::Stochastic && rng == nullptr) {
    throw std::invalid_argument("stochastic rounding requires a random stream");
  }
}

}  // namespace detail

inline OpResult emulated_add(double x, double y, Precision p, RoundingMode mode,
                             RandomStream* rng = nullptr) {
  detail::require_finite(x);
  detail::require_finite(y);
  detail::check_mode(mode, rng);
  return detail::finish(two_sum(x, y), p, mode, rng);
}

inline OpResult emulated_sub(double x, double y, Precision p, RoundingMode mode,
                             RandomStream* rng = nullptr) {
  return emulated_add(x, -y, p, mode, rng);
}

inline OpResult emulated_mul(double x, double y, Precision p, RoundingMode mode,
                             RandomStream* rng = nullptr) {
  detail::require_finite(x);
  detail::require_finite(y);
  detail::check_mode(mode, rng);
  return detail::finish(two_prod(x, y), p, mode, rng);
}

}  // namespace sumerr
