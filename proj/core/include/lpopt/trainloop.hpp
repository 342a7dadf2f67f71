// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

// Master/worker training loop with per-component quantization.
//
// Per iteration t the master holds full-precision weights W_t. Workers see
// Q_W(W_t), each returns Q_G of its stochastic gradient, the master averages
// them in ascending worker order and takes one optimizer step.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lpopt/errors.hpp"
#include "lpopt/fpquant.hpp"
#include "lpopt/optim.hpp"
#include "lpopt/problems.hpp"

namespace lpopt {

enum class OptimizerKind { QAdam, QMuon };

[[nodiscard]] std::string_view to_string(OptimizerKind k) noexcept;
[[nodiscard]] std::optional<OptimizerKind> parse_optimizer(std::string_view s) noexcept;

struct TrainConfig {
  ProblemSpec problem;
  OptimizerKind optimizer = OptimizerKind::QAdam;
  AdamHyper adam;
  MuonHyper muon;
  QuantPolicy policy;
  std::uint64_t T = 10000;
  std::size_t B = 1;
  std::uint64_t seed = 0;
  std::uint64_t telemetry_every = 1;
  std::size_t tail_window = 100;
  bool parallel_workers = false;
  bool timing = false;  // fill TrainRecord::wall_ns
};

void validate(const TrainConfig& cfg);

struct TrainRecord {
  std::uint64_t t = 0;
  double loss = 0.0;
  double grad_norm_F = 0.0;  // ||grad F(W_t)||_F at the master weights
  std::optional<double> qerr_W;
  std::optional<double> qerr_G;
  std::optional<double> qerr_M;
  std::optional<double> qerr_V;
  double update_norm_F = 0.0;
  std::optional<std::int64_t> wall_ns;

  friend bool operator==(const TrainRecord&, const TrainRecord&) = default;
};

/// Quantities observed along the whole trajectory (every iteration, not only
/// telemetry rows) for certifying theorem assumptions.
struct TrajectoryStats {
  std::vector<double> grad_norm_sq;  // ||grad F(W_t)||_F^2, t = 0..T-1
  double F0 = 0.0;
  double W0_norm = 0.0;
  double max_W_norm = 0.0;
  double max_abs_grad_hat = 0.0;   // max_t ||G_hat_t||_inf
  double max_abs_true_grad = 0.0;  // max_t ||grad F(W_t)||_inf
  double max_abs_sample_grad = 0.0;  // before gradient quantization
  double L_estimate = 0.0;         // max ||grad F(x) - grad F(y)|| / ||x - y||
  double max_update_norm = 0.0;
  double max_noise_sq = 0.0;       // max ||G_hat_t - grad F(W_t)||_F^2
  bool muon_growth_ok = true;      // ||W_t|| <= ||W_0|| + t eta sqrt(r (1 + tol)) per block
  bool moment_sandwich_ok = true;  // Adam second-moment bracketing, all steps
  bool grad_hat_bound_ok = true;   // ||G_hat||_inf <= (1+q_G) max sample grad
};

struct RunResult {
  std::vector<TrainRecord> records;
  std::uint64_t checksum = 0;  // FNV-1a over the final weights' bit patterns
  double tail_grad_norm = 0.0;
  double final_loss = 0.0;
  TrainConfig config;
  Params final_W;
  TrajectoryStats stats;
};

/// Raised from run_training with the failing iteration attached.
class TrainingError : public Error {
 public:
  TrainingError(std::uint64_t t, const std::string& what)
      : Error("iteration " + std::to_string(t) + ": " + what), t_(t) {}
  [[nodiscard]] std::uint64_t iteration() const noexcept { return t_; }

 private:
  std::uint64_t t_;
};

[[nodiscard]] RunResult run_training(const TrainConfig& cfg);

/// The average of per-worker quantized gradients at iteration t for weights
/// `wq`, exactly as run_training forms it. Exposed for recomputation checks.
struct WorkerGradients {
  std::vector<Params> per_worker;  // after Q_G
  Params average;
  std::vector<double> losses;
  double max_abs_sample = 0.0;
  double qerr_num_sq = 0.0;
  double qerr_den_sq = 0.0;
};
[[nodiscard]] WorkerGradients gather_gradients(const Problem& problem, const Params& wq,
                                               const TrainConfig& cfg, std::uint64_t t);

struct ComponentMask {
  bool weights = true;
  bool gradients = true;
  bool moment1 = true;
  bool moment2 = true;
};

/// One run per mantissa length; masked components take QuantSpec::bits(M)
/// with the base policy's rounding mode, the rest keep the base policy.
[[nodiscard]] std::vector<RunResult> sweep(const TrainConfig& base,
                                           const std::vector<int>& mantissas,
                                           const ComponentMask& components = {});

[[nodiscard]] std::uint64_t params_checksum(const Params& p) noexcept;

// Telemetry serialization.
inline constexpr std::string_view kCsvHeader =
    "t,loss,grad_norm_F,qerr_W,qerr_G,qerr_M,qerr_V,update_norm_F,wall_ns";

/// Shortest round-trip decimal.
[[nodiscard]] std::string format_double(double v);

void write_csv(std::ostream& os, const std::vector<TrainRecord>& records);
[[nodiscard]] std::vector<TrainRecord> read_csv(std::istream& is);
void write_jsonl(std::ostream& os, const std::vector<TrainRecord>& records);

/// Mean grad_norm_F over the last `window` records.
[[nodiscard]] double tail_mean_grad_norm(const std::vector<TrainRecord>& records,
                                         std::size_t window);

}  // namespace lpopt
