// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lpopt/theory.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace lpopt {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(what);
}

void validate(const AdamBoundInput& in) {
  require(in.T >= 1.0, "T must be >= 1");
  require(in.d >= 1.0, "d must be >= 1");
  require(in.eta > 0.0, "eta must be > 0");
  require(in.beta1 > 0.0 && in.beta1 < 1.0, "beta1 must lie in (0, 1)");
  require(in.beta2 > 0.0 && in.beta2 < 1.0, "beta2 must lie in (0, 1)");
  require(in.epsilon > 0.0, "epsilon must be > 0");
  require(in.q_G >= 0.0 && in.q_M >= 0.0 && in.q_W >= 0.0, "q values must be >= 0");
  require(in.q_V >= 0.0 && in.q_V < 1.0, "q_V must lie in [0, 1)");
  require(in.R > std::sqrt(in.epsilon), "R must exceed sqrt(epsilon)");
  require(in.L >= 0.0 && in.D >= 0.0 && in.F0_minus_Fstar >= 0.0, "L, D, F0 - F* must be >= 0");
}

void validate(const MuonBoundInput& in) {
  require(in.T >= 1.0, "T must be >= 1");
  require(in.eta > 0.0, "eta must be > 0");
  require(in.beta > 0.0 && in.beta < 1.0, "beta must lie in (0, 1)");
  require(in.r >= 1.0 && in.B >= 1.0, "r and B must be >= 1");
  require(in.sigma >= 0.0 && in.L >= 0.0 && in.Delta >= 0.0, "sigma, L, Delta must be >= 0");
  require(in.q_G >= 0.0 && in.q_W >= 0.0 && in.q_M >= 0.0, "q values must be >= 0");
  require(in.C2 >= 0.0, "C2 must be >= 0");
}

double param_count(const Params& p) {
  double n = 0.0;
  for (const auto& m : p) n += static_cast<double>(m.size());
  return n;
}

}  // namespace

std::vector<std::string> adam_preconditions(const AdamBoundInput& in) {
  std::vector<std::string> out;
  const double b2v = in.beta2 * (1.0 - in.q_V);
  const double b1m = in.beta1 * (1.0 + in.q_M);
  if (!(b1m * b1m < b2v)) out.emplace_back(kAdamCondRprime);
  if (!(b1m < b2v)) out.emplace_back(kAdamCondMomentum);
  if (!(2.0 * in.beta1 / (1.0 - in.beta1) <= in.T)) out.emplace_back(kAdamCondHorizon);
  return out;
}

double geometric_deficit(double T, double q) {
  if (q <= 0.0) return 0.0;
  if (q >= 1.0) return T;
  const double lq = std::log1p(-q);
  if (T <= 1e7) {
    double acc = 0.0;
    const auto n = static_cast<std::uint64_t>(T);
    for (std::uint64_t j = 1; j <= n; ++j) acc += -std::expm1(static_cast<double>(j) * lq);
    return acc;
  }
  return T - (1.0 - q) / q * -std::expm1(T * lq);
}

AdamBoundReport adam_bound(const AdamBoundInput& in) {
  validate(in);
  if (const auto bad = adam_preconditions(in); !bad.empty()) throw PreconditionViolated(bad.front());

  const double T = in.T;
  const double d = in.d;
  const double b1 = in.beta1;
  const double b2 = in.beta2;
  const double opg = 1.0 + in.q_G;
  const double b2v = b2 * (1.0 - in.q_V);
  const double b1m = b1 * (1.0 + in.q_M);
  const double R = in.R;

  AdamBoundReport r;
  r.r_prime = b1m * b1m / b2v;

  const double mom = (1.0 - b1m) * (1.0 - b1m / b2v);
  r.C = 24.0 * d * (opg * R) * (opg * R) * std::sqrt(1.0 - b1) /
            (std::pow(1.0 - b1 / b2, 1.5) * std::sqrt(1.0 - b2)) +
        2.0 * d * in.eta * in.L * opg * R * (1.0 - b1) * (1.0 - b1) / (mom * (1.0 - b2)) +
        4.0 * d * in.eta * in.eta * in.L * in.L * b1 * (1.0 - b1) / (mom * std::pow(1.0 - b2, 1.5));

  const double log_bracket =
      std::log1p((opg * R) * (opg * R) / (in.epsilon * (1.0 - b2v))) - T * std::log(b2v);
  r.log_term_C = r.C / T * log_bracket;

  const double rp = r.r_prime;
  const double first = 4.0 * opg * in.q_M * d * R * R * (1.0 - b1) * T / std::sqrt(1.0 - b2) *
                       std::sqrt(rp * (1.0 + rp)) / ((1.0 + in.q_M) * std::pow(1.0 - rp, 1.5));
  const double K = 4.0 * opg * d * R * R * (1.0 - b1) / std::sqrt((1.0 - b1 * b1 / b2v) * (1.0 - b2));
  r.Qtilde = first + K * geometric_deficit(T, in.q_V);
  r.Qtilde_over_T = r.Qtilde / T;

  r.initial = 4.0 * opg * R * in.F0_minus_Fstar / (in.eta * T);
  r.wg_term = 4.0 * opg * d / std::sqrt(in.epsilon * (1.0 - b2)) *
              (in.q_G * R * R * R + in.L * in.q_W * R * R * in.D);
  r.weight_growth_term = 2.0 * (1.0 - b1) * std::pow(d, 1.5) * in.eta * in.L * in.q_W * opg * R * R *
                         T / (std::sqrt(in.epsilon) * (1.0 - b2) * std::sqrt(1.0 - rp));

  r.total = r.initial + r.log_term_C + r.Qtilde_over_T + r.wg_term + r.weight_growth_term;
  return r;
}

std::vector<std::string> muon_preconditions(const MuonBoundInput& in) {
  std::vector<std::string> out;
  if (!(in.beta * (1.0 + in.q_M) < 1.0)) out.emplace_back(kMuonCondMomentum);
  return out;
}

MuonBoundReport muon_bound(const MuonBoundInput& in) {
  validate(in);
  if (const auto bad = muon_preconditions(in); !bad.empty()) throw PreconditionViolated(bad.front());

  const double sqrt_r = std::sqrt(in.r);
  const double sqrt_B = std::sqrt(in.B);
  const double Teta = in.T * in.eta;
  MuonBoundReport r;
  r.initial = in.Delta / Teta;
  r.momentum_drift = 2.0 * in.beta * in.L * in.eta * in.r / (1.0 - in.beta);
  r.noise_transient = 6.0 * in.sigma * sqrt_r / (in.T * (1.0 - in.beta) * sqrt_B);
  r.noise_floor = std::sqrt((1.0 - in.beta) / (1.0 + in.beta)) * 6.0 * in.sigma * sqrt_r / sqrt_B;
  r.curvature = in.L * in.eta * in.r / 2.0;
  r.quant_coeff = in.q_G + in.q_W + in.q_G * Teta + in.q_W * Teta +
                  in.q_M * in.beta / (1.0 - in.beta * (1.0 + in.q_M)) * (1.0 + Teta);
  r.quant_block = in.C2 * r.quant_coeff;
  r.total = r.initial + r.momentum_drift + r.noise_transient + r.noise_floor + r.curvature +
            r.quant_block;
  return r;
}

FlatReport flatten(const AdamBoundReport& r) {
  return {{"total", r.total},
          {"initial", r.initial},
          {"log_term_C", r.log_term_C},
          {"Qtilde_over_T", r.Qtilde_over_T},
          {"wg_term", r.wg_term},
          {"weight_growth_term", r.weight_growth_term},
          {"r_prime", r.r_prime},
          {"C", r.C},
          {"Qtilde", r.Qtilde}};
}

FlatReport flatten(const MuonBoundReport& r) {
  return {{"total", r.total},
          {"initial", r.initial},
          {"momentum_drift", r.momentum_drift},
          {"noise_transient", r.noise_transient},
          {"noise_floor", r.noise_floor},
          {"curvature", r.curvature},
          {"quant_coeff", r.quant_coeff},
          {"quant_block", r.quant_block}};
}

std::string to_json_text(const FlatReport& r) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r) j[k] = v;
  return j.dump(2);
}

std::vector<GridRow> adam_schedule_grid(const AdamBoundInput& base, const std::vector<double>& Ts) {
  std::vector<GridRow> out;
  for (double T : Ts) {
    AdamBoundInput in = base;
    in.T = T;
    in.eta = 1.0 / std::sqrt(T);
    in.beta2 = 1.0 - 1.0 / T;
    in.q_G = in.q_M = 1.0 / T;
    in.q_V = in.q_W = 1.0 / (T * T);
    const double total = adam_bound(in).total;
    out.push_back({T, total, total * std::sqrt(T) / std::log(T)});
  }
  return out;
}

std::vector<GridRow> muon_schedule_grid(const MuonBoundInput& base, const std::vector<double>& Ts,
                                        double q_scale, double q_power) {
  std::vector<GridRow> out;
  for (double T : Ts) {
    MuonBoundInput in = base;
    in.T = T;
    in.beta = 1.0 - 1.0 / std::sqrt(T);
    in.eta = std::pow(T, -0.75);
    in.B = 1.0;
    in.q_G = in.q_W = in.q_M = q_scale * std::pow(T, -q_power);
    const double total = muon_bound(in).total;
    out.push_back({T, total, total * std::pow(T, 0.25)});
  }
  return out;
}

double max_consecutive_ratio(const std::vector<GridRow>& grid, double t_min) {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (grid[i].T < t_min) continue;
    worst = std::max(worst, grid[i + 1].scaled / grid[i].scaled);
  }
  return worst;
}

BoundComparison empirical_vs_bound(const RunResult& run, const AdamBoundInput& in) {
  const TrainConfig& cfg = run.config;
  if (cfg.optimizer != OptimizerKind::QAdam) throw InvalidArgument("run is not an Adam run");
  if (static_cast<double>(cfg.T) != in.T) throw InvalidArgument("run horizon differs from bound input T");
  const auto& g2 = run.stats.grad_norm_sq;
  if (g2.size() != cfg.T) throw InvalidArgument("run has no full gradient history");

  BoundComparison c;
  double wsum = 0.0;
  double acc = 0.0;
  for (std::size_t t = 0; t < g2.size(); ++t) {
    const double w = -std::expm1(static_cast<double>(cfg.T - t) * std::log(in.beta1));
    wsum += w;
    acc += w * g2[t];
  }
  c.empirical = acc / wsum;
  c.empirical_sqrt = std::sqrt(c.empirical);
  c.bound = adam_bound(in).total;

  auto need = [&c](bool ok, const char* name) {
    if (!ok) c.uncertified.emplace_back(name);
  };
  const auto& h = cfg.adam;
  need(h.schedule == StepSchedule::Omega, "schedule");
  need(h.variant == MomentVariant::WeightedSum, "variant");
  need(h.eta == in.eta && h.beta1 == in.beta1 && h.beta2 == in.beta2 && h.epsilon == in.epsilon,
       "hyperparameters");
  need(param_count(run.final_W) == in.d, "d");
  need(run.stats.max_abs_sample_grad <= in.R - std::sqrt(in.epsilon), "R");
  need(run.stats.L_estimate <= in.L, "L");
  need(run.stats.W0_norm <= in.D, "D");
  const auto problem = make_problem(cfg.problem);
  const auto fstar = problem->optimum_value();
  need(fstar.has_value() && run.stats.F0 - *fstar <= in.F0_minus_Fstar, "F0-F*");
  const QuantPolicy& p = cfg.policy;
  need(p.q_G() <= in.q_G && p.q_M() <= in.q_M && p.q_V() <= in.q_V && p.q_W() <= in.q_W, "q");

  c.assumptions_certified = c.uncertified.empty();
  c.violated = c.assumptions_certified && c.empirical > c.bound * (1.0 + 1e-9);
  return c;
}

BoundComparison empirical_vs_bound(const RunResult& run, const MuonBoundInput& in) {
  const TrainConfig& cfg = run.config;
  if (cfg.optimizer != OptimizerKind::QMuon) throw InvalidArgument("run is not a Muon run");
  if (static_cast<double>(cfg.T) != in.T) throw InvalidArgument("run horizon differs from bound input T");
  const auto& g2 = run.stats.grad_norm_sq;
  if (g2.size() != cfg.T) throw InvalidArgument("run has no full gradient history");

  BoundComparison c;
  double acc = 0.0;
  for (double v : g2) acc += std::sqrt(v);
  c.empirical = acc / static_cast<double>(g2.size());
  c.empirical_sqrt = c.empirical;
  const MuonBoundReport rep = muon_bound(in);
  c.bound = rep.total;
  if (rep.quant_coeff > 0.0) {
    const double explicit_terms = rep.total - rep.quant_block;
    c.tight_C2 = std::max(0.0, (c.empirical - explicit_terms) / rep.quant_coeff);
  }

  auto need = [&c](bool ok, const char* name) {
    if (!ok) c.uncertified.emplace_back(name);
  };
  need(cfg.muon.eta == in.eta && cfg.muon.beta == in.beta, "hyperparameters");
  need(static_cast<double>(cfg.B) == in.B, "B");
  double r = 0.0;
  for (const auto& m : run.final_W) r = std::max(r, static_cast<double>(std::min(m.rows(), m.cols())));
  need(r <= in.r, "r");
  need(run.stats.max_noise_sq * static_cast<double>(cfg.B) <= in.sigma * in.sigma, "sigma");
  need(run.stats.L_estimate <= in.L, "L");
  const auto problem = make_problem(cfg.problem);
  const auto fstar = problem->optimum_value();
  need(fstar.has_value() && run.stats.F0 - *fstar <= in.Delta, "Delta");
  const QuantPolicy& p = cfg.policy;
  need(p.q_G() <= in.q_G && p.q_M() <= in.q_M && p.q_W() <= in.q_W, "q");

  c.assumptions_certified = c.uncertified.empty();
  c.violated = c.assumptions_certified && c.empirical > c.bound * (1.0 + 1e-9);
  return c;
}

namespace {

double known_L(const RunResult& run) {
  const ProblemSpec& ps = run.config.problem;
  if (ps.kind == ProblemKind::Quadratic) return std::max(ps.quad_hmax, run.stats.L_estimate);
  return run.stats.L_estimate * (1.0 + 1e-9);
}

}  // namespace

AdamBoundInput certified_adam_input(const RunResult& run) {
  const TrainConfig& cfg = run.config;
  AdamBoundInput in;
  in.T = static_cast<double>(cfg.T);
  in.d = param_count(run.final_W);
  in.eta = cfg.adam.eta;
  in.beta1 = cfg.adam.beta1;
  in.beta2 = cfg.adam.beta2;
  in.epsilon = cfg.adam.epsilon;
  in.q_G = cfg.policy.q_G();
  in.q_M = cfg.policy.q_M();
  in.q_V = cfg.policy.q_V();
  in.q_W = cfg.policy.q_W();
  in.R = (run.stats.max_abs_sample_grad + std::sqrt(in.epsilon)) * (1.0 + 1e-12);
  in.L = known_L(run);
  in.D = run.stats.W0_norm * (1.0 + 1e-12);
  const auto fstar = make_problem(cfg.problem)->optimum_value().value_or(0.0);
  in.F0_minus_Fstar = std::max(0.0, run.stats.F0 - fstar);
  return in;
}

MuonBoundInput certified_muon_input(const RunResult& run, double C2) {
  const TrainConfig& cfg = run.config;
  MuonBoundInput in;
  in.T = static_cast<double>(cfg.T);
  in.eta = cfg.muon.eta;
  in.beta = cfg.muon.beta;
  double r = 0.0;
  for (const auto& m : run.final_W) r = std::max(r, static_cast<double>(std::min(m.rows(), m.cols())));
  in.r = r;
  in.B = static_cast<double>(cfg.B);
  in.sigma = std::sqrt(run.stats.max_noise_sq * in.B) * (1.0 + 1e-12);
  in.L = known_L(run);
  const auto fstar = make_problem(cfg.problem)->optimum_value().value_or(0.0);
  in.Delta = std::max(0.0, run.stats.F0 - fstar);
  in.q_G = cfg.policy.q_G();
  in.q_W = cfg.policy.q_W();
  in.q_M = cfg.policy.q_M();
  in.C2 = C2;
  return in;
}

}  // namespace lpopt
