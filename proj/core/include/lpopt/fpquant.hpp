// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

// Floating-point quantization emulated on IEEE-754 binary64: the sign and the
// 11-bit exponent are kept, the 52-bit mantissa is cut to M bits with the
// selected rounding, and the result is returned as a plain double
// ("dequantized"). Relative error is at most 2^-M whenever the result stays
// a normal number.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "lpopt/densemat.hpp"
#include "lpopt/errors.hpp"
#include "lpopt/rng.hpp"

namespace lpopt {

inline constexpr int kHostMantissaBits = 52;

enum class Rounding { Truncate, NearestEven, Stochastic };

[[nodiscard]] std::string_view to_string(Rounding r) noexcept;
[[nodiscard]] std::optional<Rounding> parse_rounding(std::string_view s) noexcept;

struct QuantSpec {
  int mantissa_bits = kHostMantissaBits;
  Rounding rounding = Rounding::Stochastic;
  bool enabled = false;
  /// Replaces the default relative-error constant 2^-M when set.
  std::optional<double> q_override;

  /// Relative error bound q. Zero when disabled.
  [[nodiscard]] double bound() const noexcept;

  static QuantSpec disabled() { return {}; }
  static QuantSpec bits(int m, Rounding r = Rounding::Stochastic) {
    return QuantSpec{m, r, true, std::nullopt};
  }

  friend bool operator==(const QuantSpec&, const QuantSpec&) = default;
};

/// Input or output violates the no-overflow / no-underflow assumption.
class QuantizationError : public Error {
 public:
  enum class Kind { OverflowAfterRounding, Subnormal, NonFinite, InvalidSpec };

  QuantizationError(Kind kind, const std::string& what,
                    std::optional<std::pair<std::size_t, std::size_t>> where = std::nullopt)
      : Error(what), kind_(kind), where_(where) {}

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  /// (row, col) of the offending entry for matrix quantization.
  [[nodiscard]] const std::optional<std::pair<std::size_t, std::size_t>>& where() const noexcept {
    return where_;
  }

 private:
  Kind kind_;
  std::optional<std::pair<std::size_t, std::size_t>> where_;
};

/// Quantization settings for the four stored components.
struct QuantPolicy {
  QuantSpec weights;
  QuantSpec gradients;
  QuantSpec moment1;
  QuantSpec moment2;

  static QuantPolicy disabled() { return {}; }
  static QuantPolicy uniform(int m, Rounding r = Rounding::Stochastic) {
    const QuantSpec s = QuantSpec::bits(m, r);
    return {s, s, s, s};
  }

  [[nodiscard]] double q_W() const noexcept { return weights.bound(); }
  [[nodiscard]] double q_G() const noexcept { return gradients.bound(); }
  [[nodiscard]] double q_M() const noexcept { return moment1.bound(); }
  [[nodiscard]] double q_V() const noexcept { return moment2.bound(); }

  friend bool operator==(const QuantPolicy&, const QuantPolicy&) = default;
};

/// Throws QuantizationError(InvalidSpec) unless 0 <= M <= 52.
void validate(const QuantSpec& spec);
void validate(const QuantPolicy& policy);

/// Quantize one value. Uses the single draw rng.bits(0) in Stochastic mode.
[[nodiscard]] double quantize_scalar(double x, const QuantSpec& spec, RngStream rng = {});

/// Elementwise quantization; entry k (row-major) uses draw k of `rng`.
[[nodiscard]] Mat quantize_mat(const Mat& x, const QuantSpec& spec, RngStream rng = {});

/// Thrown by measure_rel_error for a zero reference matrix.
class ZeroNorm : public Error {
 public:
  using Error::Error;
};

/// ||xq - x||_F / ||x||_F.
[[nodiscard]] double measure_rel_error(const Mat& x, const Mat& xq);

/// Same as measure_rel_error, but returns nullopt instead of throwing.
[[nodiscard]] std::optional<double> try_rel_error(const Mat& x, const Mat& xq) noexcept;

}  // namespace lpopt
