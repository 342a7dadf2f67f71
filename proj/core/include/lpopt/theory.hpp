// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

// Right-hand sides of the quantized Adam and quantized Muon convergence
// bounds, and their comparison against recorded runs.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lpopt/errors.hpp"
#include "lpopt/trainloop.hpp"

namespace lpopt {

/// A named theorem hypothesis does not hold for the given inputs.
class PreconditionViolated : public Error {
 public:
  explicit PreconditionViolated(std::string name)
      : Error("precondition violated: " + name), name_(std::move(name)) {}
  [[nodiscard]] const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

// Precondition names as reported by PreconditionViolated.
inline constexpr const char* kAdamCondRprime = "β1²(1+q_M)² < β2(1−q_V)";
inline constexpr const char* kAdamCondMomentum = "β1(1+q_M) < β2(1−q_V)";
inline constexpr const char* kAdamCondHorizon = "2β1/(1−β1) ≤ T";
inline constexpr const char* kMuonCondMomentum = "β(1+q_M) < 1";

struct AdamBoundInput {
  double T = 1.0;
  double d = 1.0;
  double eta = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double q_G = 0.0;
  double q_M = 0.0;
  double q_V = 0.0;
  double q_W = 0.0;
  double R = 1.0;  // stochastic gradients satisfy ||g||_inf <= R - sqrt(eps)
  double L = 1.0;
  double D = 1.0;  // ||W_0||_F <= D
  double F0_minus_Fstar = 1.0;
};

struct AdamBoundReport {
  double total = 0.0;
  double initial = 0.0;
  double log_term_C = 0.0;
  double Qtilde_over_T = 0.0;
  double wg_term = 0.0;
  double weight_growth_term = 0.0;
  double r_prime = 0.0;
  double C = 0.0;
  double Qtilde = 0.0;
};

/// Names of all violated hypotheses, in declaration order.
[[nodiscard]] std::vector<std::string> adam_preconditions(const AdamBoundInput& in);

/// Throws PreconditionViolated naming the first failed hypothesis.
[[nodiscard]] AdamBoundReport adam_bound(const AdamBoundInput& in);

/// sum_{j=1}^{T} (1 - (1 - q)^j) = T - (1-q)/q (1 - (1-q)^T), exact 0 at q = 0.
[[nodiscard]] double geometric_deficit(double T, double q);

struct MuonBoundInput {
  double T = 1.0;
  double eta = 1.0;
  double beta = 0.9;
  double r = 1.0;
  double B = 1.0;
  double sigma = 0.0;
  double L = 1.0;
  double Delta = 1.0;
  double q_G = 0.0;
  double q_W = 0.0;
  double q_M = 0.0;
  double C2 = 1.0;
};

struct MuonBoundReport {
  double total = 0.0;
  double initial = 0.0;         // Delta / (eta T)
  double momentum_drift = 0.0;  // 2 beta L eta r / (1 - beta)
  double noise_transient = 0.0; // 6 sigma sqrt(r) / (T (1 - beta) sqrt(B))
  double noise_floor = 0.0;     // sqrt((1-beta)/(1+beta)) 6 sigma sqrt(r) / sqrt(B)
  double curvature = 0.0;       // L eta r / 2
  double quant_coeff = 0.0;     // bracket multiplying C2
  double quant_block = 0.0;     // C2 * quant_coeff
};

[[nodiscard]] std::vector<std::string> muon_preconditions(const MuonBoundInput& in);
[[nodiscard]] MuonBoundReport muon_bound(const MuonBoundInput& in);

/// Flat key -> number view of a report, keys in stable order.
using FlatReport = std::vector<std::pair<std::string, double>>;
[[nodiscard]] FlatReport flatten(const AdamBoundReport& r);
[[nodiscard]] FlatReport flatten(const MuonBoundReport& r);
[[nodiscard]] std::string to_json_text(const FlatReport& r);

// Asymptotic schedule grids.
struct GridRow {
  double T = 0.0;
  double total = 0.0;
  double scaled = 0.0;  // total times the rate normalizer
};

/// eta = T^-1/2, 1 - beta2 = 1/T, q_G = q_M = 1/T, q_V = q_W = 1/T^2;
/// scaled = total * sqrt(T) / ln T.
[[nodiscard]] std::vector<GridRow> adam_schedule_grid(const AdamBoundInput& base,
                                                      const std::vector<double>& Ts);

/// 1 - beta = T^-1/2, eta = T^-3/4, B = 1, q_G = q_W = q_M = q_scale * T^-q_power;
/// scaled = total * T^(1/4).
[[nodiscard]] std::vector<GridRow> muon_schedule_grid(const MuonBoundInput& base,
                                                      const std::vector<double>& Ts,
                                                      double q_scale = 1.0,
                                                      double q_power = 0.5);

/// max over consecutive rows of scaled[i+1] / scaled[i], from the first row
/// with T >= t_min.
[[nodiscard]] double max_consecutive_ratio(const std::vector<GridRow>& grid, double t_min);

struct BoundComparison {
  double empirical = 0.0;       // Adam: tau-weighted E||grad||^2; Muon: mean ||grad||
  double empirical_sqrt = 0.0;  // Adam: sqrt of the above (Jensen bound on E||grad||)
  double bound = 0.0;
  bool assumptions_certified = false;
  std::vector<std::string> uncertified;  // which assumptions failed on-trajectory
  bool violated = false;
  std::optional<double> tight_C2;  // Muon only
};

/// Compares a recorded run with the bound evaluated at `in`. Throws
/// InvalidArgument if the run's horizon or optimizer differs from `in`.
[[nodiscard]] BoundComparison empirical_vs_bound(const RunResult& run, const AdamBoundInput& in);
[[nodiscard]] BoundComparison empirical_vs_bound(const RunResult& run, const MuonBoundInput& in);

/// Bound inputs filled from a run's configuration and on-trajectory
/// measurements (R, L, D, F0 - F*, sigma), with small safety margins.
[[nodiscard]] AdamBoundInput certified_adam_input(const RunResult& run);
[[nodiscard]] MuonBoundInput certified_muon_input(const RunResult& run, double C2 = 1.0);

}  // namespace lpopt
