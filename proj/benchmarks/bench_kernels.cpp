// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "lpopt/densemat.hpp"
#include "lpopt/fpquant.hpp"
#include "lpopt/optim.hpp"
#include "lpopt/problems.hpp"
#include "lpopt/rng.hpp"

namespace {

using namespace lpopt;

Mat gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  const RngStream r{seed, 0, 0};
  Mat m(rows, cols);
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = r.normal(k);
  return m;
}

void BM_QuantizeMat(benchmark::State& state) {
  const Mat x = gaussian(50, 100, 1);
  const QuantSpec spec = QuantSpec::bits(static_cast<int>(state.range(0)));
  std::uint64_t t = 0;
  for (auto _ : state) benchmark::DoNotOptimize(quantize_mat(x, spec, RngStream{1, 2, t++}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_QuantizeMat)->Arg(4)->Arg(8)->Arg(23);

void BM_JacobiSvd(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Mat a = gaussian(n / 2, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(jacobi_svd(a));
}
BENCHMARK(BM_JacobiSvd)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Msign(benchmark::State& state) {
  const Mat a = gaussian(50, 100, 3);
  MsignOptions opts;
  opts.method = state.range(0) ? OrthoMethod::NewtonSchulz : OrthoMethod::ExactSvd;
  for (auto _ : state) benchmark::DoNotOptimize(msign(a, opts));
  state.SetLabel(opts.method == OrthoMethod::ExactSvd ? "svd" : "ns10");
}
BENCHMARK(BM_Msign)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_AdamStep(benchmark::State& state) {
  const Mat w = gaussian(50, 100, 4);
  const Mat g = gaussian(50, 100, 5);
  const QuantPolicy policy = state.range(0) ? QuantPolicy::uniform(8) : QuantPolicy::disabled();
  AdamState s = adam_step(w, g, AdamHyper{}, {}, policy, RngStream{5, 0, 0}).state;
  for (auto _ : state) benchmark::DoNotOptimize(adam_step(w, g, AdamHyper{}, s, policy, RngStream{5, 1, 0}));
}
BENCHMARK(BM_AdamStep)->Arg(0)->Arg(1);

void BM_RosenbrockGrad(benchmark::State& state) {
  const Mat w = gaussian(50, 100, 6);
  for (auto _ : state) benchmark::DoNotOptimize(rosenbrock_grad(w));
}
BENCHMARK(BM_RosenbrockGrad);

}  // namespace

BENCHMARK_MAIN();
