// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lpopt/optim.hpp"

#include <cmath>
#include <string>

#include "lpopt/binio.hpp"

namespace lpopt {

namespace {

constexpr std::string_view kStateMagic = "LPOPTST1";
constexpr std::uint64_t kAdamKind = 1;
constexpr std::uint64_t kMuonKind = 2;

void check_inputs(const Mat& W, const Mat& G, const char* who) {
  if (!W.same_shape(G)) throw DimMismatch(std::string(who) + ": W and G shapes differ");
  if (!all_finite(G)) throw NonFiniteGradient(std::string(who) + ": gradient has non-finite entries");
}

void check_unit_open(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) throw InvalidArgument(std::string(name) + " must lie in (0, 1)");
}

std::optional<double> measured(const QuantSpec& spec, const Mat& raw, const Mat& q) {
  if (!spec.enabled) return std::nullopt;
  return try_rel_error(raw, q);
}

}  // namespace

std::string_view to_string(StepSchedule s) noexcept {
  return s == StepSchedule::Omega ? "omega" : "constant";
}

std::optional<StepSchedule> parse_schedule(std::string_view s) noexcept {
  if (s == "omega") return StepSchedule::Omega;
  if (s == "constant") return StepSchedule::Constant;
  return std::nullopt;
}

std::string_view to_string(MomentVariant v) noexcept {
  return v == MomentVariant::WeightedSum ? "weighted_sum" : "weighted_average";
}

std::optional<MomentVariant> parse_variant(std::string_view s) noexcept {
  if (s == "weighted_sum" || s == "sum") return MomentVariant::WeightedSum;
  if (s == "weighted_average" || s == "average") return MomentVariant::WeightedAverage;
  return std::nullopt;
}

void validate(const AdamHyper& h) {
  if (!(h.eta > 0.0)) throw InvalidArgument("adam.eta must be > 0");
  check_unit_open(h.beta1, "adam.beta1");
  check_unit_open(h.beta2, "adam.beta2");
  if (!(h.epsilon > 0.0)) throw InvalidArgument("adam.epsilon must be > 0");
}

void validate(const MuonHyper& h) {
  if (!(h.eta > 0.0)) throw InvalidArgument("muon.eta must be > 0");
  check_unit_open(h.beta, "muon.beta");
  if (h.ortho.ns_iters < 1) throw InvalidArgument("muon.ns_iters must be >= 1");
}

double adam_step_size(const AdamHyper& h, std::uint64_t t) {
  if (h.schedule == StepSchedule::Constant) return h.eta;
  // sum_{j=0}^{t} beta2^j = (1 - beta2^{t+1}) / (1 - beta2)
  const double k = static_cast<double>(t + 1);
  const double omega_sq = -std::expm1(k * std::log(h.beta2)) / (1.0 - h.beta2);
  return (1.0 - h.beta1) * std::sqrt(omega_sq) * h.eta;
}

AdamStepResult adam_step(const Mat& W, const Mat& G, const AdamHyper& h, const AdamState& s,
                         const QuantPolicy& policy, RngStream rng) {
  check_inputs(W, G, "adam_step");
  const bool first = s.t == 0;
  if (!first && (!s.M.same_shape(W) || !s.V.same_shape(W))) {
    throw DimMismatch("adam_step: state shape differs from W");
  }
  const bool avg = h.variant == MomentVariant::WeightedAverage;
  const double gm = avg ? 1.0 - h.beta1 : 1.0;
  const double gv = avg ? 1.0 - h.beta2 : 1.0;

  AdamStepResult out;
  out.M_raw = Mat(W.rows(), W.cols());
  out.V_raw = Mat(W.rows(), W.cols());
  for (std::size_t k = 0; k < W.size(); ++k) {
    const double g = G[k];
    out.M_raw[k] = first ? gm * g : h.beta1 * s.M[k] + gm * g;
    out.V_raw[k] = first ? gv * g * g : h.beta2 * s.V[k] + gv * g * g;
  }

  const double eta_t = adam_step_size(h, s.t);
  out.update = Mat(W.rows(), W.cols());
  out.W = Mat(W.rows(), W.cols());
  for (std::size_t k = 0; k < W.size(); ++k) {
    const double u = avg ? eta_t * (out.M_raw[k] / gm) / std::sqrt(out.V_raw[k] / gv + h.epsilon)
                         : eta_t * out.M_raw[k] / std::sqrt(out.V_raw[k] + h.epsilon);
    out.update[k] = u;
    out.W[k] = W[k] - u;
  }

  out.state.t = s.t + 1;
  out.state.M = quantize_mat(out.M_raw, policy.moment1, rng.fork(1));
  out.state.V = quantize_mat(out.V_raw, policy.moment2, rng.fork(2));
  out.qerr_M = measured(policy.moment1, out.M_raw, out.state.M);
  out.qerr_V = measured(policy.moment2, out.V_raw, out.state.V);
  return out;
}

MuonStepResult muon_step(const Mat& W, const Mat& G, const MuonHyper& h, const MuonState& s,
                         const QuantPolicy& policy, RngStream rng) {
  check_inputs(W, G, "muon_step");
  const bool first = s.t == 0;
  if (!first && !s.M.same_shape(W)) throw DimMismatch("muon_step: state shape differs from W");

  MuonStepResult out;
  out.M_raw = first ? G : axpby(h.beta, s.M, 1.0 - h.beta, G);
  if (max_abs(out.M_raw) == 0.0) {
    out.skipped = true;
    out.update = Mat(W.rows(), W.cols());
    out.W = W;
  } else {
    out.update = scale(msign(out.M_raw, h.ortho), h.eta);
    out.W = sub(W, out.update);
  }
  out.state.t = s.t + 1;
  out.state.M = quantize_mat(out.M_raw, policy.moment1, rng.fork(1));
  out.qerr_M = measured(policy.moment1, out.M_raw, out.state.M);
  return out;
}

EquivalenceTrace adam_equivalence_probe(double beta, double q, std::span<const double> b,
                                        std::span<const double> delta) {
  check_unit_open(beta, "beta");
  if (!(q >= 0.0 && q < 1.0)) throw InvalidArgument("q must lie in [0, 1)");
  if (delta.size() < b.size()) throw DimMismatch("delta sequence shorter than input");
  EquivalenceTrace tr;
  tr.a.reserve(b.size());
  tr.c.reserve(b.size());
  double a_prev = 0.0;
  double c_prev = 0.0;
  double d_prev = 0.0;
  double e_prev = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    if (std::abs(delta[k]) > q) throw InvalidArgument("|delta_k| exceeds q");
    const double a = beta * (a_prev + d_prev) + b[k];
    const double c = beta * (c_prev + e_prev) + (1.0 - beta) * b[k];
    tr.a.push_back(a);
    tr.c.push_back(c);
    d_prev = delta[k] * a;
    e_prev = delta[k] * c;
    a_prev = a;
    c_prev = c;
  }
  return tr;
}

void write_state(std::ostream& os, const AdamState& s) {
  BinWriter w(os);
  w.magic(kStateMagic);
  w.u64(kAdamKind);
  w.u64(s.t);
  w.mat(s.M);
  w.mat(s.V);
}

void write_state(std::ostream& os, const MuonState& s) {
  BinWriter w(os);
  w.magic(kStateMagic);
  w.u64(kMuonKind);
  w.u64(s.t);
  w.mat(s.M);
}

AdamState read_adam_state(std::istream& is) {
  BinReader r(is);
  r.expect_magic(kStateMagic);
  if (r.u64() != kAdamKind) throw FormatError("snapshot is not an Adam state");
  AdamState s;
  s.t = r.u64();
  s.M = r.mat();
  s.V = r.mat();
  return s;
}

MuonState read_muon_state(std::istream& is) {
  BinReader r(is);
  r.expect_magic(kStateMagic);
  if (r.u64() != kMuonKind) throw FormatError("snapshot is not a Muon state");
  MuonState s;
  s.t = r.u64();
  s.M = r.mat();
  return s;
}

}  // namespace lpopt
