// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include <json.hpp>

#include "lpopt/theory.hpp"

namespace lpopt {
namespace {

AdamBoundInput adam_base() {
  AdamBoundInput in;
  in.T = 1e4;
  in.d = 25;
  in.eta = 1e-2;
  in.beta1 = 0.9;
  in.beta2 = 0.999;
  in.epsilon = 1e-8;
  in.R = 2.0;
  in.L = 2.0;
  in.D = 5.0;
  in.F0_minus_Fstar = 10.0;
  return in;
}

MuonBoundInput muon_base() {
  MuonBoundInput in;
  in.T = 1e4;
  in.eta = 1e-3;
  in.beta = 0.9;
  in.r = 5;
  in.B = 1;
  in.sigma = 0.5;
  in.L = 2.0;
  in.Delta = 10.0;
  return in;
}

double term_sum(const AdamBoundReport& r) {
  return r.initial + r.log_term_C + r.Qtilde_over_T + r.wg_term + r.weight_growth_term;
}

TEST(GeometricDeficit, MatchesDirectSum) {
  for (double q : {0.0, 1e-12, 1e-6, 1e-3, 0.1, 0.5}) {
    for (double T : {1.0, 10.0, 1000.0, 1e5}) {
      long double s = 0.0L;
      const long double lq = std::log1p(-static_cast<long double>(q));
      for (int j = 1; j <= static_cast<int>(T); ++j) s += -std::expm1(j * lq);
      const double sd = static_cast<double>(s);
      EXPECT_NEAR(geometric_deficit(T, q), sd, 1e-9 * std::max(1e-300, sd)) << q << " " << T;
    }
  }
  EXPECT_EQ(geometric_deficit(1e9, 0.0), 0.0);
  EXPECT_NEAR(geometric_deficit(1e9, 0.5), 1e9 - 1.0, 1.0);
}

TEST(AdamBound, ZeroQuantizationReducesToTwoTerms) {
  const auto r = adam_bound(adam_base());
  EXPECT_EQ(r.Qtilde, 0.0);
  EXPECT_EQ(r.wg_term, 0.0);
  EXPECT_EQ(r.weight_growth_term, 0.0);
  EXPECT_DOUBLE_EQ(r.total, r.initial + r.log_term_C);
  const auto in = adam_base();
  EXPECT_DOUBLE_EQ(r.initial, 4.0 * in.R * in.F0_minus_Fstar / (in.eta * in.T));
  EXPECT_DOUBLE_EQ(r.r_prime, in.beta1 * in.beta1 / in.beta2);
}

TEST(AdamBound, HandEvaluatedQuantizationTerms) {
  AdamBoundInput in = adam_base();
  in.q_G = 0.01;
  in.q_W = 0.02;
  const auto r = adam_bound(in);
  const double opg = 1.01;
  EXPECT_NEAR(r.wg_term,
              4 * opg * 25 / std::sqrt(1e-8 * 0.001) * (0.01 * 8 + 2 * 0.02 * 4 * 5),
              1e-9 * r.wg_term);
  const double rp = 0.81 / 0.999;
  EXPECT_NEAR(r.weight_growth_term,
              2 * 0.1 * std::pow(25.0, 1.5) * 1e-2 * 2 * 0.02 * opg * 4 * 1e4 /
                  (1e-4 * 0.001 * std::sqrt(1 - rp)),
              1e-9 * r.weight_growth_term);
  EXPECT_NEAR(r.total, term_sum(r), 1e-12 * r.total);
}

TEST(AdamBound, TermsNonNegativeAndSumToTotal) {
  const RngStream rng{3, 3, 0};
  int evaluated = 0;
  for (std::uint64_t k = 0; k < 2000; ++k) {
    AdamBoundInput in = adam_base();
    in.beta1 = 0.99 * rng.uniform(8 * k);
    in.beta2 = 0.9 + 0.0999 * rng.uniform(8 * k + 1);
    in.q_G = std::pow(10.0, -8 * rng.uniform(8 * k + 2));
    in.q_M = 0.1 * std::pow(10.0, -8 * rng.uniform(8 * k + 3));
    in.q_V = 0.1 * std::pow(10.0, -8 * rng.uniform(8 * k + 4));
    in.q_W = std::pow(10.0, -8 * rng.uniform(8 * k + 5));
    if (!adam_preconditions(in).empty()) continue;
    ++evaluated;
    const auto r = adam_bound(in);
    for (const auto& [k2, v] : flatten(r)) EXPECT_GE(v, 0.0) << k2;
    EXPECT_NEAR(r.total, term_sum(r), 1e-12 * r.total);
  }
  EXPECT_GT(evaluated, 500);
}

TEST(AdamBound, MonotoneInEachQ) {
  double AdamBoundInput::*fields[] = {&AdamBoundInput::q_G, &AdamBoundInput::q_M,
                                      &AdamBoundInput::q_V, &AdamBoundInput::q_W};
  for (auto f : fields) {
    double prev = 0.0;
    for (double q : {0.0, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 3e-2}) {
      AdamBoundInput in = adam_base();
      in.q_G = in.q_M = in.q_V = in.q_W = 1e-9;
      in.*f = std::max(q, 1e-9);
      const double total = adam_bound(in).total;
      EXPECT_GE(total, prev);
      prev = total;
    }
  }
}

TEST(AdamBound, QtildeVanishesWithMomentErrors) {
  AdamBoundInput in = adam_base();
  in.q_V = 1e-12;
  const auto r = adam_bound(in);
  const double scale = in.d * in.R * in.R * (1 - in.beta1) / std::sqrt(1 - in.beta2);
  EXPECT_LE(r.Qtilde_over_T, 1e-6 * scale);
  in.q_V = 1e-2;
  EXPECT_LE(r.Qtilde_over_T, 1e-6 * adam_bound(in).Qtilde_over_T);
}

TEST(AdamBound, PreconditionsAreNamed) {
  AdamBoundInput in = adam_base();
  in.beta1 = 0.99;
  in.beta2 = 0.9;
  const auto bad = adam_preconditions(in);
  ASSERT_GE(bad.size(), 2u);
  EXPECT_EQ(bad[0], kAdamCondRprime);
  EXPECT_EQ(bad[1], kAdamCondMomentum);
  try {
    (void)adam_bound(in);
    FAIL();
  } catch (const PreconditionViolated& e) {
    EXPECT_EQ(e.name(), kAdamCondRprime);
  }
  in = adam_base();
  in.T = 10;  // 2 beta1 / (1 - beta1) = 18
  EXPECT_EQ(adam_preconditions(in), std::vector<std::string>{kAdamCondHorizon});
}

TEST(AdamBound, ScheduleGridIsBounded) {
  const auto grid = adam_schedule_grid(adam_base(), {1e2, 1e3, 1e4, 1e5, 1e6});
  ASSERT_EQ(grid.size(), 5u);
  EXPECT_LE(max_consecutive_ratio(grid, 1e3), 1.05);
  for (const auto& row : grid) EXPECT_NEAR(row.scaled, row.total * std::sqrt(row.T) / std::log(row.T), 1e-9 * row.scaled);
}

TEST(MuonBound, TermsAndLinearityInSigma) {
  const MuonBoundInput in = muon_base();
  const auto r = muon_bound(in);
  EXPECT_EQ(r.quant_block, 0.0);
  EXPECT_DOUBLE_EQ(r.initial, 10.0 / (1e4 * 1e-3));
  EXPECT_DOUBLE_EQ(r.curvature, 2.0 * 1e-3 * 5 / 2);
  MuonBoundInput in2 = in;
  in2.sigma *= 2;
  const auto r2 = muon_bound(in2);
  EXPECT_DOUBLE_EQ(r2.noise_transient, 2 * r.noise_transient);
  EXPECT_DOUBLE_EQ(r2.noise_floor, 2 * r.noise_floor);
  EXPECT_EQ(r2.initial, r.initial);
  EXPECT_EQ(r2.momentum_drift, r.momentum_drift);
  EXPECT_EQ(r2.curvature, r.curvature);
  EXPECT_EQ(r2.quant_block, r.quant_block);
}

TEST(MuonBound, MonotoneInQAndPrecondition) {
  double MuonBoundInput::*fields[] = {&MuonBoundInput::q_G, &MuonBoundInput::q_W, &MuonBoundInput::q_M};
  for (auto f : fields) {
    double prev = 0.0;
    for (double q : {0.0, 1e-6, 1e-3, 1e-2, 0.1}) {
      MuonBoundInput in = muon_base();
      in.*f = q;
      const double total = muon_bound(in).total;
      EXPECT_GE(total, prev);
      prev = total;
    }
  }
  MuonBoundInput in = muon_base();
  in.q_M = 0.2;  // 0.9 * 1.2 >= 1
  EXPECT_EQ(muon_preconditions(in), std::vector<std::string>{kMuonCondMomentum});
  EXPECT_THROW((void)muon_bound(in), PreconditionViolated);
}

TEST(MuonBound, GridWithFastQuantDecayIsBounded) {
  // With q decaying like 1/T the momentum-quantization block stays O(T^-1/4).
  const auto grid = muon_schedule_grid(muon_base(), {1e2, 1e3, 1e4, 1e5, 1e6}, 1.0, 1.0);
  EXPECT_LE(max_consecutive_ratio(grid, 1e3), 1.05);
  const auto slow = muon_schedule_grid(muon_base(), {1e3, 1e4, 1e5}, 1.0, 0.5);
  EXPECT_GT(slow.back().scaled, slow.front().scaled);
}

TEST(Reports, JsonText) {
  const auto j = nlohmann::json::parse(to_json_text(flatten(adam_bound(adam_base()))));
  EXPECT_EQ(j.size(), flatten(adam_bound(adam_base())).size());
  EXPECT_DOUBLE_EQ(j["total"].get<double>(), adam_bound(adam_base()).total);
}

TrainConfig quadratic(OptimizerKind opt) {
  TrainConfig c;
  c.problem.kind = ProblemKind::Quadratic;
  c.problem.m = 5;
  c.problem.n = 5;
  c.problem.noise_sigma = 0.1;
  c.optimizer = opt;
  c.adam.eta = 1e-2;
  c.adam.schedule = StepSchedule::Omega;
  c.muon.eta = 1e-2;
  c.T = 500;
  c.seed = 4;
  return c;
}

TEST(EmpiricalVsBound, AdamOnQuadratic) {
  const RunResult run = run_training(quadratic(OptimizerKind::QAdam));
  const auto in = certified_adam_input(run);
  const auto c = empirical_vs_bound(run, in);
  EXPECT_TRUE(c.assumptions_certified) << (c.uncertified.empty() ? "" : c.uncertified[0]);
  EXPECT_FALSE(c.violated);
  EXPECT_LE(c.empirical, c.bound);
  EXPECT_NEAR(c.empirical_sqrt * c.empirical_sqrt, c.empirical, 1e-12 * c.empirical);
  AdamBoundInput wrong = in;
  wrong.T += 1;
  EXPECT_THROW((void)empirical_vs_bound(run, wrong), InvalidArgument);
  EXPECT_THROW((void)empirical_vs_bound(run, certified_muon_input(run)), InvalidArgument);
  AdamBoundInput small_r = in;
  small_r.R = 1e-3;
  EXPECT_FALSE(empirical_vs_bound(run, small_r).assumptions_certified);
}

TEST(EmpiricalVsBound, MuonOnQuadratic) {
  TrainConfig cfg = quadratic(OptimizerKind::QMuon);
  const RunResult run = run_training(cfg);
  const auto c = empirical_vs_bound(run, certified_muon_input(run));
  EXPECT_TRUE(c.assumptions_certified);
  EXPECT_FALSE(c.violated);
  EXPECT_FALSE(c.tight_C2.has_value());
  cfg.policy = QuantPolicy::uniform(8);
  const RunResult q = run_training(cfg);
  const auto cq = empirical_vs_bound(q, certified_muon_input(q));
  ASSERT_TRUE(cq.tight_C2.has_value());
  EXPECT_GE(*cq.tight_C2, 0.0);
}

}  // namespace
}  // namespace lpopt
