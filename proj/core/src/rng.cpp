// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lpopt/rng.hpp"

#include <cmath>
#include <numbers>

namespace lpopt {

double RngStream::normal(std::uint64_t offset) const noexcept {
  // 1 - u lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform(2 * offset);
  const double u2 = uniform(2 * offset + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace lpopt
