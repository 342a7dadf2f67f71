// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

// Small helpers shared by the unit tests.

#pragma once

#include <cmath>
#include <cstdint>

#include "lpopt/densemat.hpp"
#include "lpopt/rng.hpp"

namespace lpopt::testing {

inline Mat random_normal(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0) {
  const RngStream rng{seed, 0xabcdefULL, 0};
  Mat a(rows, cols);
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = scale * rng.normal(k);
  return a;
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace lpopt::testing
