// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "lpopt/errors.hpp"

namespace lpopt {

/// Dense row-major real matrix.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat zeros(std::size_t rows, std::size_t cols) { return Mat(rows, cols); }
  static Mat identity(std::size_t n);
  static Mat diag(std::span<const double> values);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
  double& operator[](std::size_t k) noexcept { return data_[k]; }
  double operator[](std::size_t k) const noexcept { return data_[k]; }

  [[nodiscard]] std::span<double> data() noexcept { return data_; }
  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
  [[nodiscard]] std::span<double> row(std::size_t i) noexcept {
    return std::span<double>(data_).subspan(i * cols_, cols_);
  }
  [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }

  [[nodiscard]] bool same_shape(const Mat& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Errors specific to the matrix kernels.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

class ZeroMatrix : public Error {
 public:
  using Error::Error;
};

// Arithmetic. All throw DimMismatch on incompatible shapes.
[[nodiscard]] Mat matmul(const Mat& a, const Mat& b);
[[nodiscard]] Mat matmul_nt(const Mat& a, const Mat& b);  // a * b^T
[[nodiscard]] Mat matmul_tn(const Mat& a, const Mat& b);  // a^T * b
[[nodiscard]] Mat add(const Mat& a, const Mat& b);
[[nodiscard]] Mat sub(const Mat& a, const Mat& b);
[[nodiscard]] Mat scale(const Mat& a, double s);
[[nodiscard]] Mat axpby(double alpha, const Mat& a, double beta, const Mat& b);
[[nodiscard]] Mat transpose(const Mat& a);
[[nodiscard]] Mat hadamard(const Mat& a, const Mat& b);
[[nodiscard]] Mat elementwise_map(const Mat& a, const std::function<double(double)>& f);

[[nodiscard]] double frob_norm(const Mat& a) noexcept;
[[nodiscard]] double frob_dot(const Mat& a, const Mat& b);
[[nodiscard]] double max_abs(const Mat& a) noexcept;
[[nodiscard]] bool all_finite(const Mat& a) noexcept;

/// Thin SVD, A = U diag(S) V^T with r = min(m, n).
struct SvdResult {
  Mat U;                  // m x r, orthonormal columns
  std::vector<double> S;  // r values, non-increasing, >= 0
  Mat V;                  // n x r, orthonormal columns
};

inline constexpr int kJacobiMaxSweeps = 60;

/// One-sided (Hestenes) Jacobi SVD. Throws NoConvergence after
/// kJacobiMaxSweeps sweeps.
[[nodiscard]] SvdResult jacobi_svd(const Mat& a);

[[nodiscard]] double nuclear_norm(const Mat& a);

enum class OrthoMethod { ExactSvd, NewtonSchulz };

/// Quintic Newton-Schulz coefficients (a, b, c) of X <- aX + bXX^TX + cX(X^TX)^2.
using NsCoeffs = std::array<double, 3>;
inline constexpr NsCoeffs kDefaultNsCoeffs{3.4445, -4.7750, 2.0315};

/// Bound on ||msign(A)||_F^2 / r - 1 for each method. Newton-Schulz iterates
/// started from a Frobenius-normalized matrix keep every singular value below
/// the maximum of the quintic on [0, 1] (about 1.2025 for the default
/// coefficients), so their squared norm stays under 1.45 r.
[[nodiscard]] double msign_norm_tolerance(OrthoMethod method) noexcept;

struct MsignOptions {
  OrthoMethod method = OrthoMethod::ExactSvd;
  int ns_iters = 10;
  NsCoeffs ns_coeffs = kDefaultNsCoeffs;
  double rank_rel_tol = 1e-12;  // ExactSvd: drop sigma_i < sigma_max * tol
};

/// Orthogonal polar factor U V^T. Throws ZeroMatrix when A == 0.
[[nodiscard]] Mat msign(const Mat& a, const MsignOptions& opts = {});

}  // namespace lpopt
