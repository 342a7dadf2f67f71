// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "lpopt/fpquant.hpp"
#include "support.hpp"

namespace lpopt {
namespace {

// Grid oracle built from frexp/ldexp rather than bit manipulation.
struct Bracket {
  double down;
  double up;
  double ulp;
};

Bracket bracket(double x, int m) {
  int k = 0;
  std::frexp(std::abs(x), &k);  // |x| = f 2^k, f in [0.5, 1)
  const double ulp = std::ldexp(1.0, k - 1 - m);
  const double down = std::floor(std::abs(x) / ulp) * ulp;
  const double s = x < 0 ? -1.0 : 1.0;
  return {s * down, s * (down + ulp), ulp};
}

double oracle(double x, int m, Rounding r) {
  const Bracket b = bracket(x, m);
  if (b.down == x) return x;
  if (r == Rounding::Truncate) return b.down;
  const double lo = std::abs(x - b.down);
  const double hi = std::abs(b.up - x);
  if (lo < hi) return b.down;
  if (hi < lo) return b.up;
  const auto steps = static_cast<std::uint64_t>(std::abs(b.down) / b.ulp);
  return steps % 2 == 0 ? b.down : b.up;
}

TEST(Quantize, HandExamples) {
  const auto t7 = QuantSpec::bits(7, Rounding::Truncate);
  EXPECT_EQ(quantize_scalar(1.0, t7), 1.0);
  EXPECT_EQ(quantize_scalar(1.0 + 0x1p-8, t7), 1.0);
  EXPECT_EQ(quantize_scalar(-1.0 - 0x1p-8, t7), -1.0);
  EXPECT_EQ(quantize_scalar(0.0, t7), 0.0);
  const auto ne1 = QuantSpec::bits(1, Rounding::NearestEven);
  EXPECT_EQ(quantize_scalar(1.25, ne1), 1.0);   // tie, 1.0 has even mantissa
  EXPECT_EQ(quantize_scalar(1.75, ne1), 2.0);   // tie, carries into the next binade
  EXPECT_EQ(quantize_scalar(1.74, ne1), 1.5);
}

TEST(Quantize, DisabledIsIdentity) {
  for (double x : {0.1, -3.0e200, 1e-300, 12345.678}) {
    EXPECT_EQ(quantize_scalar(x, QuantSpec::disabled()), x);
  }
}

TEST(Quantize, MatchesGridOracleForDeterministicModes) {
  const RngStream rng{9, 1, 0};
  for (int m = 0; m <= 30; ++m) {
    for (std::uint64_t k = 0; k < 2000; ++k) {
      const double x = (rng.bits(2 * k) & 1 ? -1.0 : 1.0) *
                       std::exp2(-40.0 + 80.0 * rng.uniform(2 * k + 1));
      for (auto mode : {Rounding::Truncate, Rounding::NearestEven}) {
        ASSERT_EQ(quantize_scalar(x, QuantSpec::bits(m, mode)), oracle(x, m, mode))
            << "x=" << x << " M=" << m;
      }
    }
  }
}

TEST(Quantize, StochasticPicksABracketingValue) {
  const RngStream rng{4, 2, 0};
  for (int m : {1, 3, 7, 12, 23}) {
    for (std::uint64_t k = 0; k < 2000; ++k) {
      const double x = 0.5 + 100.0 * rng.uniform(k);
      const Bracket b = bracket(x, m);
      const double q = quantize_scalar(x, QuantSpec::bits(m), rng.fork(k));
      ASSERT_TRUE(q == b.down || q == b.up || q == x);
    }
  }
}

TEST(Quantize, StochasticIsUnbiased) {
  const double x = 1.0 + 0.3 * 0x1p-5;
  const auto spec = QuantSpec::bits(5);
  const RngStream rng{11, 3, 0};
  constexpr int kN = 100000;
  double s = 0.0;
  double s2 = 0.0;
  for (int k = 0; k < kN; ++k) {
    const double v = quantize_scalar(x, spec, rng.advanced(k));
    s += v;
    s2 += v * v;
  }
  const double mean = s / kN;
  const double stderr_ = std::sqrt((s2 / kN - mean * mean) / kN);
  EXPECT_LE(std::abs(mean - x), 5.0 * stderr_);
}

TEST(Quantize, RepresentableValuesAreFixedPoints) {
  const RngStream rng{5, 5, 0};
  for (int m = 0; m <= 20; ++m) {
    for (std::uint64_t k = 0; k < 200; ++k) {
      const double v = bracket(1.0 + 1000.0 * rng.uniform(k), m).down;
      for (auto mode : {Rounding::Truncate, Rounding::NearestEven, Rounding::Stochastic}) {
        ASSERT_EQ(quantize_scalar(v, QuantSpec::bits(m, mode), rng.fork(k)), v);
      }
    }
  }
}

TEST(Quantize, IdempotentAndMonotoneInPrecision) {
  const RngStream rng{6, 6, 0};
  for (std::uint64_t k = 0; k < 5000; ++k) {
    const double x = std::exp2(-20.0 + 40.0 * rng.uniform(k));
    double prev_err = INFINITY;
    for (int m = 0; m <= 52; ++m) {
      for (auto mode : {Rounding::Truncate, Rounding::NearestEven}) {
        const auto spec = QuantSpec::bits(m, mode);
        const double q = quantize_scalar(x, spec);
        ASSERT_EQ(quantize_scalar(q, spec), q);
      }
      const double err = std::abs(quantize_scalar(x, QuantSpec::bits(m, Rounding::Truncate)) - x);
      ASSERT_LE(err, prev_err);
      prev_err = err;
    }
  }
}

TEST(Quantize, CarryIncrementsExponentByOne) {
  const double x = std::nextafter(2.0, 0.0);
  const double q = quantize_scalar(x, QuantSpec::bits(4, Rounding::NearestEven));
  EXPECT_EQ(q, 2.0);
}

TEST(Quantize, RelativeErrorBoundLogUniform) {
  const RngStream rng{8, 8, 0};
  for (int m = 1; m <= 10; ++m) {
    const double q = std::ldexp(1.0, -m);
    for (std::uint64_t k = 0; k < 10000; ++k) {
      const double x = std::exp2(-60.0 + 120.0 * rng.uniform(k));
      for (auto mode : {Rounding::Truncate, Rounding::NearestEven, Rounding::Stochastic}) {
        const double v = quantize_scalar(x, QuantSpec::bits(m, mode), rng.fork(k));
        ASSERT_LE(std::abs(v - x), q * x);
      }
    }
  }
}

TEST(Quantize, RejectsNonFiniteSubnormalAndOverflow) {
  const auto spec = QuantSpec::bits(4, Rounding::NearestEven);
  EXPECT_THROW((void)quantize_scalar(std::numeric_limits<double>::infinity(), spec),
               QuantizationError);
  EXPECT_THROW((void)quantize_scalar(std::numeric_limits<double>::quiet_NaN(), spec),
               QuantizationError);
  try {
    (void)quantize_scalar(std::numeric_limits<double>::denorm_min(), spec);
    FAIL();
  } catch (const QuantizationError& e) {
    EXPECT_EQ(e.kind(), QuantizationError::Kind::Subnormal);
  }
  try {
    (void)quantize_scalar(std::numeric_limits<double>::max(), spec);
    FAIL();
  } catch (const QuantizationError& e) {
    EXPECT_EQ(e.kind(), QuantizationError::Kind::OverflowAfterRounding);
  }
  EXPECT_THROW(validate(QuantSpec::bits(53)), QuantizationError);
  EXPECT_THROW(validate(QuantSpec::bits(-1)), QuantizationError);
}

TEST(Quantize, BoundAndOverride) {
  EXPECT_EQ(QuantSpec::bits(7).bound(), 0x1p-7);
  EXPECT_EQ(QuantSpec::disabled().bound(), 0.0);
  QuantSpec s = QuantSpec::bits(7);
  s.q_override = 0.02;
  EXPECT_EQ(s.bound(), 0.02);
  const auto p = QuantPolicy::uniform(10);
  EXPECT_EQ(p.q_W(), 0x1p-10);
  EXPECT_EQ(p.q_V(), 0x1p-10);
  EXPECT_EQ(QuantPolicy::disabled().q_G(), 0.0);
}

TEST(QuantizeMat, ZeroAndExactEntries) {
  EXPECT_EQ(quantize_mat(Mat(3, 4), QuantSpec::bits(3)), Mat(3, 4));
  const Mat x(4, 5, 1.5);
  EXPECT_EQ(quantize_mat(x, QuantSpec::bits(1, Rounding::Truncate)), x);
}

TEST(QuantizeMat, FrobeniusBound) {
  const Mat x = testing::random_normal(50, 100, 1);
  for (auto mode : {Rounding::Truncate, Rounding::NearestEven, Rounding::Stochastic}) {
    const Mat xq = quantize_mat(x, QuantSpec::bits(7, mode), RngStream{2, 3, 0});
    const double rel = measure_rel_error(x, xq);
    EXPECT_LE(rel, 0x1p-7);
    EXPECT_GT(rel, 0.0);
  }
}

TEST(QuantizeMat, EntryUsesItsOwnDraw) {
  const Mat x = testing::random_normal(3, 3, 2);
  const auto spec = QuantSpec::bits(3);
  const RngStream rng{1, 1, 0};
  const Mat xq = quantize_mat(x, spec, rng);
  for (std::size_t k = 0; k < x.size(); ++k) {
    EXPECT_EQ(xq[k], quantize_scalar(x[k], spec, rng.advanced(k)));
  }
}

TEST(QuantizeMat, ReportsOffendingEntry) {
  Mat x(2, 3, 1.0);
  x(1, 2) = std::numeric_limits<double>::max();
  try {
    (void)quantize_mat(x, QuantSpec::bits(2, Rounding::NearestEven));
    FAIL();
  } catch (const QuantizationError& e) {
    ASSERT_TRUE(e.where().has_value());
    EXPECT_EQ(e.where()->first, 1u);
    EXPECT_EQ(e.where()->second, 2u);
  }
}

TEST(RelError, Basics) {
  const Mat x = testing::random_normal(4, 4, 3);
  EXPECT_EQ(measure_rel_error(x, x), 0.0);
  EXPECT_NEAR(measure_rel_error(x, scale(x, 1.01)), 0.01, 1e-12);
  EXPECT_THROW((void)measure_rel_error(Mat(2, 2), Mat(2, 2)), ZeroNorm);
  EXPECT_FALSE(try_rel_error(Mat(2, 2), Mat(2, 2)).has_value());
}

TEST(Rounding, NamesRoundTrip) {
  for (auto r : {Rounding::Truncate, Rounding::NearestEven, Rounding::Stochastic}) {
    EXPECT_EQ(parse_rounding(to_string(r)), r);
  }
  EXPECT_FALSE(parse_rounding("round").has_value());
}

}  // namespace
}  // namespace lpopt
