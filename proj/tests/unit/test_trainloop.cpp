// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "lpopt/trainloop.hpp"
#include "support.hpp"

namespace lpopt {
namespace {

TrainConfig rosenbrock_adam(std::uint64_t T) {
  TrainConfig c;
  c.problem.kind = ProblemKind::Rosenbrock;
  c.optimizer = OptimizerKind::QAdam;
  c.T = T;
  c.seed = 1;
  return c;
}

TrainConfig small_mlp() {
  TrainConfig c;
  c.problem.kind = ProblemKind::SyntheticMlp;
  c.problem.mlp_layers = {4, 8, 3};
  c.problem.num_classes = 3;
  c.problem.dataset_size = 60;
  c.problem.batch = 2;
  c.problem.noise_sigma = 0.01;
  c.adam.eta = 1e-2;
  c.B = 4;
  c.T = 40;
  c.seed = 9;
  c.policy = QuantPolicy::uniform(6);
  return c;
}

TEST(Train, DisabledQuantizationMatchesPlainAdam) {
  const TrainConfig cfg = rosenbrock_adam(10000);
  const RunResult res = run_training(cfg);

  // Hand-written full-precision Adam on the same objective and start.
  Mat w = make_problem(cfg.problem)->init_params(cfg.seed)[0];
  std::vector<double> m(w.size());
  std::vector<double> v(w.size());
  const AdamHyper& h = cfg.adam;
  double tail = 0.0;
  for (std::uint64_t t = 0; t < cfg.T; ++t) {
    const Mat g = rosenbrock_grad(w);
    double gn = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) gn += g[k] * g[k];
    if (t >= cfg.T - 100) tail += std::sqrt(gn);
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = t == 0 ? g[k] : h.beta1 * m[k] + g[k];
      v[k] = t == 0 ? g[k] * g[k] : h.beta2 * v[k] + g[k] * g[k];
      w[k] = w[k] - h.eta * m[k] / std::sqrt(v[k] + h.epsilon);
    }
  }
  EXPECT_EQ(res.tail_grad_norm, tail / 100.0);
  EXPECT_EQ(res.final_W[0], w);
  EXPECT_EQ(res.records.size(), cfg.T);
  for (const auto& r : res.records) {
    EXPECT_FALSE(r.qerr_W || r.qerr_G || r.qerr_M || r.qerr_V);
    EXPECT_FALSE(r.wall_ns);
  }
}

TEST(Train, LossNonIncreasingAfterWarmup) {
  const RunResult res = run_training(rosenbrock_adam(3000));
  for (std::size_t t = 101; t < res.records.size(); ++t) {
    EXPECT_LE(res.records[t].loss, res.records[t - 1].loss) << "t=" << t;
  }
}

TEST(Train, LowPrecisionHurtsBothOptimizers) {
  for (auto opt : {OptimizerKind::QAdam, OptimizerKind::QMuon}) {
    TrainConfig c = rosenbrock_adam(2000);
    c.problem.m = 10;
    c.problem.n = 20;
    c.optimizer = opt;
    c.adam.eta = c.muon.eta = 5e-3;
    const auto rs = sweep(c, {4, 52});
    EXPECT_GT(rs[0].tail_grad_norm, rs[1].tail_grad_norm) << to_string(opt);
  }
}

TEST(Train, RecordsAndQerrBounds) {
  TrainConfig c = rosenbrock_adam(250);
  c.policy = QuantPolicy::uniform(7);
  c.telemetry_every = 7;
  c.timing = true;
  const RunResult res = run_training(c);
  EXPECT_EQ(res.records.size(), (250u + 6u) / 7u);
  for (const auto& r : res.records) {
    EXPECT_EQ(r.t % 7, 0u);
    ASSERT_TRUE(r.qerr_W && r.qerr_G && r.qerr_M && r.qerr_V);
    EXPECT_LE(*r.qerr_W, c.policy.q_W());
    EXPECT_LE(*r.qerr_G, c.policy.q_G());
    EXPECT_LE(*r.qerr_M, c.policy.q_M());
    EXPECT_LE(*r.qerr_V, c.policy.q_V());
    ASSERT_TRUE(r.wall_ns.has_value());
    EXPECT_GE(*r.wall_ns, 0);
  }
  EXPECT_TRUE(res.stats.moment_sandwich_ok);
  EXPECT_TRUE(res.stats.grad_hat_bound_ok);
}

TEST(Train, MuonGrowthInvariantHolds) {
  TrainConfig c = rosenbrock_adam(300);
  c.problem.m = 8;
  c.problem.n = 12;
  c.optimizer = OptimizerKind::QMuon;
  c.muon.eta = 1e-2;
  c.policy = QuantPolicy::uniform(5);
  const RunResult res = run_training(c);
  EXPECT_TRUE(res.stats.muon_growth_ok);
  for (const auto& r : res.records) EXPECT_FALSE(r.qerr_V.has_value());
}

TEST(Train, DeterministicIncludingParallelWorkers) {
  TrainConfig c = small_mlp();
  const RunResult a = run_training(c);
  const RunResult b = run_training(c);
  c.parallel_workers = true;
  const RunResult p = run_training(c);
  EXPECT_EQ(a.checksum, b.checksum);
  EXPECT_EQ(a.checksum, p.checksum);
  std::ostringstream sa;
  std::ostringstream sp;
  write_csv(sa, a.records);
  write_csv(sp, p.records);
  EXPECT_EQ(sa.str(), sp.str());
  c.seed += 1;
  EXPECT_NE(run_training(c).checksum, a.checksum);
}

TEST(Train, WorkerAverageRecomputes) {
  const TrainConfig c = small_mlp();
  const auto problem = make_problem(c.problem);
  const Params w = problem->init_params(c.seed);
  const std::uint64_t t = 3;
  const WorkerGradients wg = gather_gradients(*problem, w, c, t);
  ASSERT_EQ(wg.per_worker.size(), c.B);
  for (std::size_t i = 0; i < c.B; ++i) {
    const GradSample s = problem->sample_grad(w, derive_stream(c.seed, StreamTag::GradNoise, i, t),
                                              c.problem.batch);
    for (std::size_t b = 0; b < s.grad.size(); ++b) {
      EXPECT_EQ(wg.per_worker[i][b],
                quantize_mat(s.grad[b], c.policy.gradients,
                             derive_stream(c.seed, StreamTag::Gradients, i, t, b)));
    }
  }
  for (std::size_t b = 0; b < wg.average.size(); ++b) {
    for (std::size_t k = 0; k < wg.average[b].size(); ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < c.B; ++i) s += wg.per_worker[i][b][k];
      EXPECT_DOUBLE_EQ(wg.average[b][k], s / static_cast<double>(c.B));
    }
  }
}

TEST(Train, MlpReachesHighTrainAccuracy) {
  TrainConfig c;
  c.problem.kind = ProblemKind::SyntheticMlp;
  c.problem.dataset_seed = 7;
  c.problem.batch = 32;
  c.adam.eta = 1e-2;
  c.T = 50 * (c.problem.dataset_size / c.problem.batch);  // 50 epochs
  c.seed = 2;
  const RunResult res = run_training(c);
  const auto problem = make_problem(c.problem);
  EXPECT_GE(mlp_accuracy(res.final_W, *problem_dataset(*problem)), 0.95);
}

TEST(Sweep, SingletonMatchesRunAndPoliciesAreApplied) {
  TrainConfig c = rosenbrock_adam(50);
  c.policy.weights = QuantSpec::bits(30, Rounding::Truncate);
  const auto one = sweep(c, {8});
  TrainConfig direct = c;
  direct.policy.weights = QuantSpec::bits(8, Rounding::Truncate);
  direct.policy.gradients = direct.policy.moment1 = direct.policy.moment2 = QuantSpec::bits(8);
  EXPECT_EQ(one[0].checksum, run_training(direct).checksum);

  const auto many = sweep(c, {4, 8, 16, 24, 52}, ComponentMask{false, true, false, false});
  ASSERT_EQ(many.size(), 5u);
  const int ms[] = {4, 8, 16, 24, 52};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(many[i].config.policy.gradients, QuantSpec::bits(ms[i]));
    EXPECT_EQ(many[i].config.policy.weights, c.policy.weights);
    EXPECT_FALSE(many[i].config.policy.moment1.enabled);
  }
  EXPECT_THROW((void)sweep(c, {}), InvalidArgument);
}

TEST(Csv, RoundTripAndFormat) {
  TrainConfig c = rosenbrock_adam(30);
  c.policy = QuantPolicy::uniform(5);
  c.policy.moment2 = QuantSpec::disabled();
  const RunResult res = run_training(c);
  std::stringstream ss;
  write_csv(ss, res.records);
  EXPECT_EQ(ss.str().substr(0, kCsvHeader.size()), kCsvHeader);
  const auto back = read_csv(ss);
  EXPECT_EQ(back, res.records);
  EXPECT_EQ(tail_mean_grad_norm(back, 100), res.tail_grad_norm);
  std::stringstream bad("t,loss\n1,2\n");
  EXPECT_THROW((void)read_csv(bad), InvalidArgument);
}

TEST(Csv, ShortestRoundTripFormatting) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1e-300), "1e-300");
  const RngStream rng{1, 1, 0};
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const double v = std::ldexp(rng.uniform(k), static_cast<int>(k % 200) - 100);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Jsonl, OneObjectPerRecord) {
  TrainConfig c = rosenbrock_adam(3);
  std::stringstream ss;
  write_jsonl(ss, run_training(c).records);
  std::string line;
  int n = 0;
  while (std::getline(ss, line)) {
    EXPECT_EQ(line.front(), '{');
    EXPECT_NE(line.find("\"qerr_W\":null"), std::string::npos);
    ++n;
  }
  EXPECT_EQ(n, 3);
}

TEST(Train, ErrorsCarryIteration) {
  TrainConfig c = rosenbrock_adam(10);
  c.problem.init_mean = 1e300;  // gradient overflows immediately
  try {
    (void)run_training(c);
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_EQ(e.iteration(), 0u);
  }
  c = rosenbrock_adam(0);
  EXPECT_THROW((void)run_training(c), InvalidArgument);
}

}  // namespace
}  // namespace lpopt
