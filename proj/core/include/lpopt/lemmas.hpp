// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

// Randomized numerical certification of the auxiliary inequalities used by
// the convergence analysis. Each check draws parameters inside the lemma's
// hypotheses, evaluates both sides directly and records lhs / rhs.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lpopt/errors.hpp"

namespace lpopt {

class LemmaViolated : public Error {
 public:
  LemmaViolated(std::string name, std::string witness)
      : Error("lemma " + name + " violated: " + witness),
        name_(std::move(name)),
        witness_(std::move(witness)) {}
  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] const std::string& witness() const noexcept { return witness_; }

 private:
  std::string name_;
  std::string witness_;
};

struct LemmaResult {
  std::string name;
  std::uint64_t trials = 0;
  std::uint64_t violations = 0;
  double max_ratio = 0.0;  // max lhs / rhs; <= 1 means every trial held
  std::string witness;     // first violating instance, if any
};

struct LemmaSuiteReport {
  std::vector<LemmaResult> results;
  double seconds = 0.0;
  [[nodiscard]] bool ok() const noexcept;
};

/// Runs every check with `trials` random instances each. With
/// throw_on_violation the first failing lemma raises LemmaViolated after
/// the suite completes.
[[nodiscard]] LemmaSuiteReport check_lemma_suite(std::uint64_t seed, std::uint64_t trials,
                                                 bool throw_on_violation = false);

// Direct evaluations used by the suite; exposed for unit tests.

/// sum_{k<K} rho^k sqrt(k+1) and its bound 2 / (1-rho)^{3/2}.
[[nodiscard]] double geom_sqrt_sum(double rho, std::uint64_t K);
[[nodiscard]] double geom_sqrt_bound(double rho);

/// sum_{k<K} rho^k sqrt(k) (k+1) and its bound 4 rho / (1-rho)^{5/2}.
[[nodiscard]] double geom_k32_sum(double rho, std::uint64_t K);
[[nodiscard]] double geom_k32_bound(double rho);

/// sum_j c_j^2 / (eps + b_j) for b_n = sum beta2^{n-j} a_j^2,
/// c_n = sum beta1^{n-j} a_j; and the log bound.
struct SumRatio {
  double lhs = 0.0;
  double rhs = 0.0;
};
[[nodiscard]] SumRatio sum_ratio(std::span<const double> a, double beta1, double beta2, double eps);

/// sum a^k |g_k| / sqrt(sum b^k g_k^2) and sqrt(1 / (1 - a^2 / b)).
[[nodiscard]] double cauchy_ratio(std::span<const double> g, double a, double b);
[[nodiscard]] double cauchy_bound(double a, double b);

/// Weights beta1^k ((1+q_M)^k - 1) against (beta2 (1-q_V))^k, and the bound
/// q_M sqrt(r'(1+r')) / ((1+q_M) (1-r')^{3/2}).
[[nodiscard]] double refined_cauchy_ratio(std::span<const double> g, double beta1, double beta2,
                                          double q_M, double q_V);
[[nodiscard]] double refined_cauchy_bound(double beta1, double beta2, double q_M, double q_V);

/// Final |a_t - b_t| of a_t = k (a_{t-1} + c_{t-1}) + d_t, b_t = k b_{t-1} + d_t with
/// c_t = rel_t a_t, and the bound sum_{j<t} ((k(1+q))^{t-j} - k^{t-j}) |d_j|.
/// d[0] is unused (zero initial state), matching t >= 1 indexing.
[[nodiscard]] SumRatio discrete_error(std::span<const double> d, std::span<const double> rel,
                                      double k, double q);

}  // namespace lpopt
