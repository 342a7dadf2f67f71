// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

// Quantized Adam and quantized Muon as pure state transitions.
//
// Moments persist only in quantized form: each step reads Q(M_{t-1}),
// Q(V_{t-1}) from the state, forms the fresh moments in full precision,
// applies the update with them, and stores their quantized images.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "lpopt/densemat.hpp"
#include "lpopt/errors.hpp"
#include "lpopt/fpquant.hpp"
#include "lpopt/rng.hpp"

namespace lpopt {

class NonFiniteGradient : public Error {
 public:
  using Error::Error;
};

enum class StepSchedule { Omega, Constant };
enum class MomentVariant { WeightedSum, WeightedAverage };

[[nodiscard]] std::string_view to_string(StepSchedule s) noexcept;
[[nodiscard]] std::optional<StepSchedule> parse_schedule(std::string_view s) noexcept;
[[nodiscard]] std::string_view to_string(MomentVariant v) noexcept;
[[nodiscard]] std::optional<MomentVariant> parse_variant(std::string_view s) noexcept;

struct AdamHyper {
  double eta = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  StepSchedule schedule = StepSchedule::Constant;
  MomentVariant variant = MomentVariant::WeightedSum;
};

void validate(const AdamHyper& h);

/// eta_t for iteration t (0-based). Omega uses
/// (1 - beta1) * sqrt(sum_{j<=t} beta2^j) * eta, i.e. Omega at step t + 1.
[[nodiscard]] double adam_step_size(const AdamHyper& h, std::uint64_t t);

struct AdamState {
  std::uint64_t t = 0;
  Mat M;  // Q_M(M_{t-1})
  Mat V;  // Q_V(V_{t-1})
};

struct AdamStepResult {
  Mat W;
  AdamState state;
  Mat M_raw;   // M_t before quantization
  Mat V_raw;   // V_t before quantization
  Mat update;  // W - W'
  std::optional<double> qerr_M;
  std::optional<double> qerr_V;
};

/// One Adam step. The WeightedAverage variant keeps averaged moments
/// m = (1-beta1)-weighted, v = (1-beta2)-weighted and rescales them in the
/// update so that without quantization both variants give the same iterate.
/// Q_M and Q_V draw from rng.fork(1) and rng.fork(2).
[[nodiscard]] AdamStepResult adam_step(const Mat& W, const Mat& G, const AdamHyper& h,
                                       const AdamState& s, const QuantPolicy& policy,
                                       RngStream rng);

struct MuonHyper {
  double eta = 5e-4;
  double beta = 0.9;
  MsignOptions ortho;
};

void validate(const MuonHyper& h);

struct MuonState {
  std::uint64_t t = 0;
  Mat M;  // Q_M(M_{t-1})
};

struct MuonStepResult {
  Mat W;
  MuonState state;
  Mat M_raw;
  Mat update;
  std::optional<double> qerr_M;
  bool skipped = false;  // M_t == 0, W unchanged
};

/// One Muon step: M_t = beta Q(M_{t-1}) + (1-beta) G (M_0 = G_0),
/// W' = W - eta msign(M_t). Q_M draws from rng.fork(1).
[[nodiscard]] MuonStepResult muon_step(const Mat& W, const Mat& G, const MuonHyper& h,
                                       const MuonState& s, const QuantPolicy& policy,
                                       RngStream rng);

/// Scalar weighted-sum system a_k = beta (a_{k-1} + d_{k-1}) + b_k and
/// weighted-average system c_k = beta (c_{k-1} + e_{k-1}) + (1-beta) b_k with
/// d_k = delta_k a_k, e_k = delta_k c_k. Requires |delta_k| <= q.
struct EquivalenceTrace {
  std::vector<double> a;
  std::vector<double> c;
};
[[nodiscard]] EquivalenceTrace adam_equivalence_probe(double beta, double q,
                                                      std::span<const double> b,
                                                      std::span<const double> delta);

// Snapshots in the flat binary format (magic "LPOPTST1").
void write_state(std::ostream& os, const AdamState& s);
void write_state(std::ostream& os, const MuonState& s);
[[nodiscard]] AdamState read_adam_state(std::istream& is);
[[nodiscard]] MuonState read_muon_state(std::istream& is);

}  // namespace lpopt
