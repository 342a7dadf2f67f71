// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lpopt/densemat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace lpopt {

namespace {

std::string shape(const Mat& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimMismatch(std::string(op) + ": " + shape(a) + " vs " + shape(b));
  }
}

double dot(std::span<const double> x, std::span<const double> y) noexcept {
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) acc += x[k] * y[k];
  return acc;
}

void rotate(std::span<double> p, std::span<double> q, double c, double s) noexcept {
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double xp = p[k];
    const double xq = q[k];
    p[k] = c * xp - s * xq;
    q[k] = s * xp + c * xq;
  }
}

// Orthonormal columns for directions with (numerically) zero singular value,
// built by Gram-Schmidt against the columns already accepted.
void complete_basis(Mat& u, const std::vector<bool>& have) {
  const std::size_t m = u.rows();
  const std::size_t r = u.cols();
  std::vector<bool> done = have;
  for (std::size_t j = 0; j < r; ++j) {
    if (done[j]) continue;
    std::vector<double> best;
    double best_norm = -1.0;
    for (std::size_t k = 0; k < m; ++k) {
      std::vector<double> v(m, 0.0);
      v[k] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t c = 0; c < r; ++c) {
          if (!done[c]) continue;
          double proj = 0.0;
          for (std::size_t i = 0; i < m; ++i) proj += u(i, c) * v[i];
          for (std::size_t i = 0; i < m; ++i) v[i] -= proj * u(i, c);
        }
      }
      const double nv = std::sqrt(dot(v, v));
      if (nv > best_norm) {
        best_norm = nv;
        best = std::move(v);
      }
      if (best_norm > 0.7) break;
    }
    for (std::size_t i = 0; i < m; ++i) u(i, j) = best[i] / best_norm;
    done[j] = true;
  }
}

// m >= n case.
SvdResult jacobi_svd_tall(const Mat& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Mat w = transpose(a);  // row j holds column j of A
  Mat vt = Mat::identity(n);
  const double tol = std::numeric_limits<double>::epsilon() * static_cast<double>(m);

  bool converged = false;
  for (int sweep = 0; sweep < kJacobiMaxSweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        auto wp = w.row(p);
        auto wq = w.row(q);
        const double alpha = dot(wp, wp);
        const double beta = dot(wq, wq);
        const double gamma = dot(wp, wq);
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(wp, wq, c, s);
        rotate(vt.row(p), vt.row(q), c, s);
      }
    }
  }
  if (!converged) {
    throw NoConvergence("jacobi_svd: no convergence after " +
                        std::to_string(kJacobiMaxSweeps) + " sweeps on " + shape(a));
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(dot(w.row(j), w.row(j)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  SvdResult out{Mat(m, n), std::vector<double>(n), Mat(n, n)};
  const double smax = sigma[order[0]];
  std::vector<bool> have(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.S[j] = sigma[src];
    for (std::size_t k = 0; k < n; ++k) out.V(k, j) = vt(src, k);
    if (sigma[src] > 0.0 && sigma[src] > smax * 1e-14) {
      for (std::size_t i = 0; i < m; ++i) out.U(i, j) = w(src, i) / sigma[src];
      have[j] = true;
    }
  }
  if (std::find(have.begin(), have.end(), false) != have.end()) complete_basis(out.U, have);
  return out;
}

Mat newton_schulz(const Mat& a, int iters, const NsCoeffs& k) {
  const bool wide = a.rows() <= a.cols();
  Mat x = scale(wide ? a : transpose(a), 1.0 / frob_norm(a));
  for (int it = 0; it < iters; ++it) {
    const Mat gram = matmul_nt(x, x);
    const Mat poly = axpby(k[1], gram, k[2], matmul(gram, gram));
    x = axpby(k[0], x, 1.0, matmul(poly, x));
  }
  return wide ? x : transpose(x);
}

}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimMismatch("Mat: data length " + std::to_string(data_.size()) + " != " +
                      std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimMismatch("Mat: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(std::size_t n) {
  Mat out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

Mat Mat::diag(std::span<const double> values) {
  Mat out(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out(i, i) = values[i];
  return out;
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw DimMismatch("matmul: " + shape(a) + " * " + shape(b));
  Mat out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t l = 0; l < a.cols(); ++l) {
      const double av = a(i, l);
      if (av == 0.0) continue;
      const auto brow = b.row(l);
      for (std::size_t j = 0; j < orow.size(); ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) throw DimMismatch("matmul_nt: " + shape(a) + " * " + shape(b) + "^T");
  Mat out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  }
  return out;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) throw DimMismatch("matmul_tn: " + shape(a) + "^T * " + shape(b));
  Mat out(a.cols(), b.cols());
  for (std::size_t l = 0; l < a.rows(); ++l) {
    const auto brow = b.row(l);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double av = a(l, i);
      if (av == 0.0) continue;
      auto orow = out.row(i);
      for (std::size_t j = 0; j < orow.size(); ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Mat add(const Mat& a, const Mat& b) { return axpby(1.0, a, 1.0, b); }
Mat sub(const Mat& a, const Mat& b) { return axpby(1.0, a, -1.0, b); }

Mat scale(const Mat& a, double s) {
  Mat out = a;
  for (auto& v : out.data()) v *= s;
  return out;
}

Mat axpby(double alpha, const Mat& a, double beta, const Mat& b) {
  require_same_shape(a, b, "axpby");
  Mat out(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = alpha * a[k] + beta * b[k];
  return out;
}

Mat transpose(const Mat& a) {
  Mat out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

Mat hadamard(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "hadamard");
  Mat out(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] * b[k];
  return out;
}

Mat elementwise_map(const Mat& a, const std::function<double(double)>& f) {
  Mat out(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = f(a[k]);
  return out;
}

double frob_norm(const Mat& a) noexcept { return std::sqrt(dot(a.data(), a.data())); }

double frob_dot(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "frob_dot");
  return dot(a.data(), b.data());
}

double max_abs(const Mat& a) noexcept {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

bool all_finite(const Mat& a) noexcept {
  return std::all_of(a.data().begin(), a.data().end(), [](double v) { return std::isfinite(v); });
}

SvdResult jacobi_svd(const Mat& a) {
  if (a.empty()) throw DimMismatch("jacobi_svd: empty matrix");
  if (a.rows() >= a.cols()) return jacobi_svd_tall(a);
  SvdResult t = jacobi_svd_tall(transpose(a));
  return SvdResult{std::move(t.V), std::move(t.S), std::move(t.U)};
}

double nuclear_norm(const Mat& a) {
  const auto svd = jacobi_svd(a);
  return std::accumulate(svd.S.begin(), svd.S.end(), 0.0);
}

double msign_norm_tolerance(OrthoMethod method) noexcept {
  return method == OrthoMethod::ExactSvd ? 1e-9 : 0.45;
}

Mat msign(const Mat& a, const MsignOptions& opts) {
  if (max_abs(a) == 0.0) throw ZeroMatrix("msign: zero matrix has no polar factor");
  if (opts.method == OrthoMethod::NewtonSchulz) {
    return newton_schulz(a, opts.ns_iters, opts.ns_coeffs);
  }
  const SvdResult svd = jacobi_svd(a);
  const double cutoff = svd.S.front() * opts.rank_rel_tol;
  std::size_t keep = 0;
  while (keep < svd.S.size() && svd.S[keep] >= cutoff) ++keep;

  Mat out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < keep; ++k) {
      const double u = svd.U(i, k);
      for (std::size_t j = 0; j < a.cols(); ++j) orow[j] += u * svd.V(j, k);
    }
  }
  return out;
}

}  // namespace lpopt
