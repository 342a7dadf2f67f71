// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lpopt/fpquant.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace lpopt {

namespace {

constexpr std::uint64_t kExpMask = 0x7ff0000000000000ULL;
constexpr std::uint64_t kMantMask = 0x000fffffffffffffULL;

double quantize_unchecked(double x, int m, Rounding rounding, const RngStream& rng,
                          std::size_t offset) {
  const auto raw = std::bit_cast<std::uint64_t>(x);
  const std::uint64_t exp_bits = raw & kExpMask;
  if (exp_bits == kExpMask) {
    throw QuantizationError(QuantizationError::Kind::NonFinite,
                            "cannot quantize a non-finite value");
  }
  if (exp_bits == 0) {
    if ((raw & kMantMask) == 0) return x;  // signed zero
    throw QuantizationError(QuantizationError::Kind::Subnormal,
                            "subnormal input violates the no-underflow assumption");
  }

  const int drop = kHostMantissaBits - m;
  if (drop == 0) return x;

  const std::uint64_t unit = std::uint64_t{1} << drop;
  const std::uint64_t low = raw & (unit - 1);
  std::uint64_t kept = raw & ~(unit - 1);
  if (low == 0) return x;

  bool up = false;
  switch (rounding) {
    case Rounding::Truncate:
      break;
    case Rounding::NearestEven: {
      const std::uint64_t half = unit >> 1;
      up = low > half || (low == half && (kept & unit) != 0);
      break;
    }
    case Rounding::Stochastic: {
      // P(up) = low / 2^drop exactly, so E[Q(x)] = x.
      const std::uint64_t draw = rng.bits(offset) >> (64 - drop);
      up = draw < low;
      break;
    }
  }
  if (up) {
    // Carry out of the mantissa lands in the exponent field: next binade,
    // zero mantissa.
    kept += unit;
    if ((kept & kExpMask) == kExpMask) {
      throw QuantizationError(QuantizationError::Kind::OverflowAfterRounding,
                              "rounding carried the exponent past the binary64 maximum");
    }
  }
  return std::bit_cast<double>(kept);
}

}  // namespace

std::string_view to_string(Rounding r) noexcept {
  switch (r) {
    case Rounding::Truncate:
      return "truncate";
    case Rounding::NearestEven:
      return "nearest";
    case Rounding::Stochastic:
      return "stochastic";
  }
  return "?";
}

std::optional<Rounding> parse_rounding(std::string_view s) noexcept {
  if (s == "truncate") return Rounding::Truncate;
  if (s == "nearest" || s == "nearest_even") return Rounding::NearestEven;
  if (s == "stochastic") return Rounding::Stochastic;
  return std::nullopt;
}

double QuantSpec::bound() const noexcept {
  if (!enabled) return 0.0;
  if (q_override) return *q_override;
  return std::ldexp(1.0, -mantissa_bits);
}

void validate(const QuantSpec& spec) {
  if (spec.mantissa_bits < 0 || spec.mantissa_bits > kHostMantissaBits) {
    throw QuantizationError(QuantizationError::Kind::InvalidSpec,
                            "mantissa_bits must lie in [0, 52], got " +
                                std::to_string(spec.mantissa_bits));
  }
}

void validate(const QuantPolicy& policy) {
  validate(policy.weights);
  validate(policy.gradients);
  validate(policy.moment1);
  validate(policy.moment2);
}

double quantize_scalar(double x, const QuantSpec& spec, RngStream rng) {
  if (!spec.enabled) return x;
  validate(spec);
  return quantize_unchecked(x, spec.mantissa_bits, spec.rounding, rng, 0);
}

Mat quantize_mat(const Mat& x, const QuantSpec& spec, RngStream rng) {
  if (!spec.enabled) return x;
  validate(spec);
  Mat out(x.rows(), x.cols());
  for (std::size_t k = 0; k < x.size(); ++k) {
    try {
      out[k] = quantize_unchecked(x[k], spec.mantissa_bits, spec.rounding, rng, k);
    } catch (const QuantizationError& e) {
      const std::size_t r = k / x.cols();
      const std::size_t c = k % x.cols();
      throw QuantizationError(e.kind(),
                              std::string(e.what()) + " at (" + std::to_string(r) + ", " +
                                  std::to_string(c) + ")",
                              std::make_pair(r, c));
    }
  }
  return out;
}

double measure_rel_error(const Mat& x, const Mat& xq) {
  if (!x.same_shape(xq)) throw DimMismatch("measure_rel_error: shape mismatch");
  const double ref = frob_norm(x);
  if (ref == 0.0) throw ZeroNorm("measure_rel_error: reference matrix has zero norm");
  return frob_norm(sub(xq, x)) / ref;
}

std::optional<double> try_rel_error(const Mat& x, const Mat& xq) noexcept {
  if (!x.same_shape(xq)) return std::nullopt;
  const double ref = frob_norm(x);
  if (ref == 0.0) return std::nullopt;
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = xq[k] - x[k];
    acc += d * d;
  }
  return std::sqrt(acc) / ref;
}

}  // namespace lpopt
