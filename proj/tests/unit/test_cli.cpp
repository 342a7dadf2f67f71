// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli/commands.hpp"
#include "cli/config.hpp"

namespace lpopt::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lpopt_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

const std::string kAdamCfg = std::string(LPOPT_CONFIG_DIR) + "/rosenbrock_adam.cfg";

TEST(Config, ParsesCommentsAndRejectsGarbage) {
  const auto kv = parse_key_values("# c\n a.b = 1 # tail\n\nc.d=x\n", "t");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"a.b", "1"}));
  EXPECT_EQ(kv[1].second, "x");
  EXPECT_THROW((void)parse_key_values("novalue\n", "t"), ConfigError);
  EXPECT_THROW((void)split_override("abc"), ConfigError);
}

TEST(Config, UnknownKeysAndBadValuesRejected) {
  EXPECT_THROW((void)build_config({{"adam.etaa", "1"}}), ConfigError);
  EXPECT_THROW((void)build_config({{"adam.eta", "fast"}}), ConfigError);
  EXPECT_THROW((void)build_config({{"train.T", "-3"}}), ConfigError);
  EXPECT_THROW((void)build_config({{"problem.kind", "cifar"}}), ConfigError);
  EXPECT_THROW((void)build_config({{"adam.beta1", "1.5"}}), ConfigError);
  EXPECT_THROW((void)build_config({{"policy.all.mantissa", "60"}}), ConfigError);
}

TEST(Config, AllPolicyAliasAndEchoRoundTrip) {
  CliConfig c = build_config({{"policy.all.mantissa", "9"}, {"policy.moment2.rounding", "truncate"},
                              {"problem.mlp_layers", "5,6,4"}, {"sweep.components", "G,V"}});
  EXPECT_EQ(c.train.policy.weights, QuantSpec::bits(9));
  EXPECT_EQ(c.train.policy.moment2, QuantSpec::bits(9, Rounding::Truncate));
  EXPECT_EQ(c.train.problem.mlp_layers, (std::vector<std::size_t>{5, 6, 4}));
  EXPECT_FALSE(c.components.weights);
  EXPECT_TRUE(c.components.moment2);
  const CliConfig back = build_config(parse_key_values(echo(c), "echo"));
  EXPECT_EQ(echo(back), echo(c));
  EXPECT_EQ(back.train.policy, c.train.policy);
}

TEST(Config, BundledConfigsLoad) {
  for (const char* name : {"rosenbrock_adam.cfg", "rosenbrock_muon.cfg", "mlp_adam.cfg", "quadratic_adam.cfg"}) {
    EXPECT_NO_THROW((void)build_config(read_key_values(fs::path(LPOPT_CONFIG_DIR) / name))) << name;
  }
}

TEST(Cli, RunWritesCsvAndSummaryThatAgree) {
  const fs::path dir = scratch("run");
  const auto o = invoke({"run", "--config", kAdamCfg, "--out", dir.string(), "--train.T=300",
                         "--override", "policy.all.mantissa=10"});
  ASSERT_EQ(o.code, 0) << o.err;
  std::ifstream csv(dir / "run.csv");
  const auto recs = read_csv(csv);
  EXPECT_EQ(recs.size(), 300u);
  const Summary s = read_summary(dir / "summary.txt");
  EXPECT_EQ(tail_mean_grad_norm(recs, 100), s.tail_grad_norm);
  EXPECT_NE(slurp(dir / "summary.txt").find("policy.weights.mantissa = 10"), std::string::npos);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  ASSERT_EQ(invoke({"run", "--config", kAdamCfg, "--out", a.string(), "--train.T=200"}).code, 0);
  ASSERT_EQ(invoke({"run", "--config", kAdamCfg, "--out", b.string(), "--train.T=200"}).code, 0);
  EXPECT_EQ(slurp(a / "run.csv"), slurp(b / "run.csv"));
  EXPECT_EQ(slurp(a / "summary.txt").substr(0, 60), slurp(b / "summary.txt").substr(0, 60));
}

TEST(Cli, FullMantissaMatchesDisabled) {
  const fs::path a = scratch("m52");
  const fs::path b = scratch("off");
  ASSERT_EQ(invoke({"run", "--config", kAdamCfg, "--out", a.string(), "--train.T=500",
                    "--policy.all.mantissa=52"}).code, 0);
  ASSERT_EQ(invoke({"run", "--config", kAdamCfg, "--out", b.string(), "--train.T=500",
                    "--policy.all.enabled=false"}).code, 0);
  EXPECT_NEAR(read_summary(a / "summary.txt").tail_grad_norm,
              read_summary(b / "summary.txt").tail_grad_norm, 1e-10);
}

TEST(Cli, ConfigErrorsExitTwoWithoutOutput) {
  const fs::path dir = scratch("missing");
  EXPECT_EQ(invoke({"run", "--config", "/nonexistent.cfg", "--out", dir.string()}).code, kExitConfig);
  EXPECT_FALSE(fs::exists(dir));
  EXPECT_EQ(invoke({"run", "--config", kAdamCfg, "--out", dir.string(), "--adam.nope=1"}).code, kExitConfig);
  EXPECT_EQ(invoke({"run", "--config", kAdamCfg, "stray"}).code, kExitConfig);
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitConfig);
  EXPECT_EQ(invoke({"sweep", "--config", kAdamCfg, "--out", dir.string(), "--mantissas", ""}).code, kExitConfig);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Cli, RuntimeErrorExitsThree) {
  const fs::path dir = scratch("overflow");
  const auto o = invoke({"run", "--config", kAdamCfg, "--out", dir.string(), "--problem.init_mean=1e300"});
  EXPECT_EQ(o.code, kExitRuntime);
  EXPECT_NE(o.err.find("iteration 0"), std::string::npos);
}

TEST(Cli, SweepWritesPerMantissaFilesAndSummary) {
  const fs::path dir = scratch("sweep");
  const auto o = invoke({"sweep", "--config", kAdamCfg, "--out", dir.string(), "--train.T=400",
                         "--mantissas", "4,8,16,24,32,52", "--jobs", "2"});
  ASSERT_EQ(o.code, 0) << o.err;
  for (int m : {4, 8, 16, 24, 32, 52}) EXPECT_TRUE(fs::exists(dir / ("run_M" + std::to_string(m) + ".csv")));
  EXPECT_TRUE(fs::exists(dir / "plot_sweep.py"));
  std::ifstream f(dir / "sweep_summary.csv");
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line, "M,tail_grad_norm,final_loss,mean_qerr_W,mean_qerr_G,mean_qerr_M,mean_qerr_V");
  std::vector<double> ms;
  std::vector<double> lg;
  while (std::getline(f, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    ASSERT_EQ(cols.size(), 7u);
    const double m = std::stod(cols[0]);
    if (m <= 24) {
      ms.push_back(m);
      lg.push_back(std::log(std::stod(cols[4])));
    }
  }
  // ln(qerr_G) against M: slope close to -ln 2.
  const double n = static_cast<double>(ms.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    sx += ms[i];
    sy += lg[i];
    sxx += ms[i] * ms[i];
    sxy += ms[i] * lg[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_NEAR(slope, -std::log(2.0), 0.3 * std::log(2.0));

  // Parallel dispatch gives the same bytes as sequential.
  const fs::path seq = scratch("sweep_seq");
  ASSERT_EQ(invoke({"sweep", "--config", kAdamCfg, "--out", seq.string(), "--train.T=400",
                    "--mantissas", "4,8,16,24,32,52"}).code, 0);
  EXPECT_EQ(slurp(seq / "run_M8.csv"), slurp(dir / "run_M8.csv"));
  EXPECT_EQ(slurp(seq / "sweep_summary.csv"), slurp(dir / "sweep_summary.csv"));
}

TEST(Cli, BoundsReportsPreconditionsAndTerms) {
  const std::string dir = LPOPT_CONFIG_DIR;
  const auto bad = invoke({"bounds", dir + "/adam_bad.params"});
  EXPECT_EQ(bad.code, kExitPrecondition);
  EXPECT_NE(bad.err.find("β1(1+q_M) < β2(1−q_V)"), std::string::npos);

  const auto ok = invoke({"bounds", dir + "/adam_bound.params", "--override", "q_G=0", "--override", "q_M=0",
                          "--override", "q_V=0", "--override", "q_W=0"});
  ASSERT_EQ(ok.code, 0) << ok.err;
  EXPECT_NE(ok.out.find("wg_term = 0\n"), std::string::npos);
  EXPECT_NE(ok.out.find("weight_growth_term = 0\n"), std::string::npos);
  EXPECT_NE(ok.out.find("Qtilde_over_T = 0\n"), std::string::npos);

  const auto grid = invoke({"bounds", dir + "/adam_bound.params", "--grid"});
  EXPECT_EQ(grid.code, 0);
  EXPECT_NE(grid.out.find("total*sqrt(T)/ln(T)"), std::string::npos);

  EXPECT_EQ(invoke({"bounds", dir + "/muon_bound.params"}).code, 0);
  EXPECT_EQ(invoke({"bounds", dir + "/muon_bound.params", "--override", "eps=1"}).code, kExitConfig);
}

TEST(Cli, LemmasAndDatasetGen) {
  const auto l = invoke({"lemmas", "--seed", "0", "--trials", "200"});
  EXPECT_EQ(l.code, 0) << l.out;
  EXPECT_NE(l.out.find("discrete error"), std::string::npos);

  const fs::path dir = scratch("ds");
  const fs::path file = dir / "blobs.bin";
  const auto g = invoke({"dataset", "gen", "--config", std::string(LPOPT_CONFIG_DIR) + "/mlp_adam.cfg",
                         "--out", file.string()});
  ASSERT_EQ(g.code, 0) << g.err;
  const std::string bytes = slurp(file);
  EXPECT_EQ(bytes.substr(0, 8), "LPOPTDS1");
  const fs::path again = dir / "again.bin";
  ASSERT_EQ(invoke({"dataset", "gen", "--config", std::string(LPOPT_CONFIG_DIR) + "/mlp_adam.cfg",
                    "--out", again.string()}).code, 0);
  EXPECT_EQ(slurp(again), bytes);
}

}  // namespace
}  // namespace lpopt::cli
