// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lpopt/problems.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lpopt/binio.hpp"

namespace lpopt {

namespace {

constexpr std::string_view kDatasetMagic = "LPOPTDS1";

RngStream init_stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t block = 0) {
  return derive_stream(seed, StreamTag::Init, purpose, 0, block);
}

void add_noise_and_clip(Params& grad, const ProblemSpec& spec, RngStream rng, std::size_t batch) {
  const double std_dev = spec.noise_sigma / std::sqrt(static_cast<double>(batch));
  for (std::size_t b = 0; b < grad.size(); ++b) {
    auto data = grad[b].data();
    if (std_dev > 0.0) {
      const RngStream block_rng = rng.fork(b);
      for (std::size_t k = 0; k < data.size(); ++k) data[k] += std_dev * block_rng.normal(k);
    }
    if (spec.grad_clip > 0.0) {
      for (auto& v : data) v = std::clamp(v, -spec.grad_clip, spec.grad_clip);
    }
  }
}

Mat normal_mat(std::size_t rows, std::size_t cols, double mean, double std_dev, RngStream rng) {
  Mat out(rows, cols);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = mean + std_dev * rng.normal(k);
  return out;
}

class RosenbrockProblem final : public Problem {
 public:
  explicit RosenbrockProblem(ProblemSpec s) : Problem(std::move(s)) {}

  Params init_params(std::uint64_t seed) const override {
    return {normal_mat(spec().m, spec().n, spec().init_mean, spec().init_std, init_stream(seed, 0))};
  }
  double value(const Params& w) const override { return rosenbrock_value(w.at(0)); }
  Params full_grad(const Params& w) const override { return {rosenbrock_grad(w.at(0))}; }
  GradSample sample_grad(const Params& w, RngStream rng, std::size_t batch) const override {
    GradSample s{rosenbrock_value(w.at(0)), full_grad(w), {}};
    add_noise_and_clip(s.grad, spec(), rng, batch);
    return s;
  }
  std::optional<double> optimum_value() const override { return 0.0; }
};

class QuadraticProblem final : public Problem {
 public:
  explicit QuadraticProblem(ProblemSpec s) : Problem(std::move(s)), h_(quadratic_curvatures(spec())) {}

  Params init_params(std::uint64_t seed) const override {
    return {normal_mat(spec().m, spec().n, spec().init_mean, spec().init_std, init_stream(seed, 0))};
  }
  double value(const Params& w) const override {
    const Mat& x = w.at(0);
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) acc += h_[k] * x[k] * x[k];
    return 0.5 * acc;
  }
  Params full_grad(const Params& w) const override { return {hadamard(h_, w.at(0))}; }
  GradSample sample_grad(const Params& w, RngStream rng, std::size_t batch) const override {
    GradSample s{value(w), full_grad(w), {}};
    add_noise_and_clip(s.grad, spec(), rng, batch);
    return s;
  }
  std::optional<double> optimum_value() const override { return 0.0; }

 private:
  Mat h_;
};

class MlpProblem final : public Problem {
 public:
  explicit MlpProblem(ProblemSpec s) : Problem(std::move(s)), data_(make_synthetic_dataset(spec())) {
    all_ids_.resize(data_.labels.size());
    for (std::size_t i = 0; i < all_ids_.size(); ++i) all_ids_[i] = i;
  }

  Params init_params(std::uint64_t seed) const override {
    const auto& layers = spec().mlp_layers;
    Params p;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
      const std::size_t fan_in = layers[l];
      const std::size_t fan_out = layers[l + 1];
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      const RngStream rng = init_stream(seed, 0, l);
      Mat w(fan_out, fan_in);
      for (std::size_t k = 0; k < w.size(); ++k) w[k] = limit * (2.0 * rng.uniform(k) - 1.0);
      p.push_back(std::move(w));
      p.emplace_back(1, fan_out);
    }
    return p;
  }
  double value(const Params& w) const override { return mlp_loss_grad(w, data_, all_ids_).loss; }
  Params full_grad(const Params& w) const override {
    return mlp_loss_grad(w, data_, all_ids_).grad;
  }
  GradSample sample_grad(const Params& w, RngStream rng, std::size_t batch) const override {
    std::vector<std::size_t> ids(batch);
    const auto n = static_cast<double>(data_.labels.size());
    for (std::size_t k = 0; k < batch; ++k) {
      ids[k] = std::min(data_.labels.size() - 1, static_cast<std::size_t>(rng.uniform(k) * n));
    }
    MlpEval e = mlp_loss_grad(w, data_, ids);
    GradSample s{e.loss, std::move(e.grad), std::move(ids)};
    add_noise_and_clip(s.grad, spec(), rng.fork(0xabcdef), batch);
    return s;
  }

  const SyntheticDataset& dataset() const noexcept { return data_; }

 private:
  SyntheticDataset data_;
  std::vector<std::size_t> all_ids_;
};

}  // namespace

std::string_view to_string(ProblemKind k) noexcept {
  switch (k) {
    case ProblemKind::Rosenbrock:
      return "rosenbrock";
    case ProblemKind::SyntheticMlp:
      return "mlp";
    case ProblemKind::Quadratic:
      return "quadratic";
  }
  return "?";
}

std::optional<ProblemKind> parse_problem_kind(std::string_view s) noexcept {
  if (s == "rosenbrock") return ProblemKind::Rosenbrock;
  if (s == "mlp" || s == "synthetic_mlp") return ProblemKind::SyntheticMlp;
  if (s == "quadratic") return ProblemKind::Quadratic;
  return std::nullopt;
}

void validate(const ProblemSpec& spec) {
  if (spec.batch == 0) throw InvalidArgument("problem.batch must be >= 1");
  if (!(spec.noise_sigma >= 0.0)) throw InvalidArgument("problem.noise_sigma must be >= 0");
  if (!(spec.grad_clip >= 0.0)) throw InvalidArgument("problem.grad_clip must be >= 0");
  switch (spec.kind) {
    case ProblemKind::Rosenbrock:
      if (spec.m < 1 || spec.n < 2) throw InvalidArgument("rosenbrock requires m >= 1 and n >= 2");
      break;
    case ProblemKind::Quadratic:
      if (spec.m < 1 || spec.n < 1) throw InvalidArgument("quadratic requires m, n >= 1");
      if (!(spec.quad_hmin > 0.0 && spec.quad_hmin <= spec.quad_hmax)) {
        throw InvalidArgument("quadratic requires 0 < quad_hmin <= quad_hmax");
      }
      break;
    case ProblemKind::SyntheticMlp: {
      const auto& layers = spec.mlp_layers;
      if (layers.size() < 2) throw InvalidArgument("mlp_layers needs at least input and output");
      if (std::find(layers.begin(), layers.end(), 0u) != layers.end()) {
        throw InvalidArgument("mlp_layers entries must be >= 1");
      }
      if (spec.num_classes < 2) throw InvalidArgument("num_classes must be >= 2");
      if (layers.back() != spec.num_classes) {
        throw InvalidArgument("last mlp layer must equal num_classes");
      }
      if (spec.num_classes > 2 * layers.front()) {
        throw InvalidArgument("num_classes must be <= 2 * input dimension");
      }
      if (spec.dataset_size < 1) throw InvalidArgument("dataset_size must be >= 1");
      break;
    }
  }
}

double rosenbrock_value(const Mat& w) {
  if (w.cols() < 2) throw InvalidArgument("rosenbrock requires n >= 2");
  double acc = 0.0;
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t j = 0; j + 1 < w.cols(); ++j) {
      const double a = w(i, j + 1) - w(i, j) * w(i, j);
      const double b = 1.0 - w(i, j);
      acc += 100.0 * a * a + b * b;
    }
  }
  return acc;
}

Mat rosenbrock_grad(const Mat& w) {
  if (w.cols() < 2) throw InvalidArgument("rosenbrock requires n >= 2");
  Mat g(w.rows(), w.cols());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t j = 0; j + 1 < w.cols(); ++j) {
      const double a = w(i, j + 1) - w(i, j) * w(i, j);
      const double b = 1.0 - w(i, j);
      g(i, j) += -2.0 * b - 400.0 * w(i, j) * a;
      g(i, j + 1) += 200.0 * a;
    }
  }
  return g;
}

SyntheticDataset make_synthetic_dataset(const ProblemSpec& spec) {
  validate(spec);
  if (spec.kind != ProblemKind::SyntheticMlp) {
    throw InvalidArgument("make_synthetic_dataset requires an mlp problem spec");
  }
  const std::size_t dim = spec.mlp_layers.front();
  const std::size_t k = spec.num_classes;
  const std::size_t n = spec.dataset_size;
  // Means at +-a e_c with a = sep / sqrt(2): any two distinct means are at
  // least `sep` apart.
  const double a = spec.class_sep / std::sqrt(2.0);
  const RngStream rng = init_stream(spec.dataset_seed, 1);

  SyntheticDataset ds{Mat(n, dim), std::vector<std::size_t>(n), k, spec.dataset_seed};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % k;
    ds.labels[i] = label;
    auto row = ds.features.row(i);
    for (std::size_t j = 0; j < dim; ++j) row[j] = rng.normal(i * dim + j);
    row[label % dim] += label < dim ? a : -a;
  }
  return ds;
}

void write_dataset(std::ostream& os, const SyntheticDataset& ds) {
  BinWriter w(os);
  w.magic(kDatasetMagic);
  w.u64(ds.features.rows());
  w.u64(ds.features.cols());
  w.u64(ds.num_classes);
  w.u64(ds.seed);
  for (double v : ds.features.data()) w.f64(v);
  for (std::size_t y : ds.labels) w.f64(static_cast<double>(y));
}

SyntheticDataset read_dataset(std::istream& is) {
  BinReader r(is);
  r.expect_magic(kDatasetMagic);
  const std::uint64_t n = r.u64();
  const std::uint64_t dim = r.u64();
  SyntheticDataset ds;
  ds.num_classes = r.u64();
  ds.seed = r.u64();
  if (dim == 0 || n > (std::uint64_t{1} << 32) / dim) throw FormatError("dataset dimensions out of range");
  ds.features = Mat(n, dim);
  for (auto& v : ds.features.data()) v = r.f64();
  ds.labels.resize(n);
  for (auto& y : ds.labels) {
    const double v = r.f64();
    if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(ds.num_classes)) {
      throw FormatError("dataset label out of range");
    }
    y = static_cast<std::size_t>(v);
  }
  return ds;
}

MlpEval mlp_loss_grad(const Params& params, const SyntheticDataset& ds,
                      std::span<const std::size_t> ids) {
  if (params.empty() || params.size() % 2 != 0) throw DimMismatch("mlp params must be (W, b) pairs");
  if (ids.empty()) throw InvalidArgument("mlp_loss_grad: empty batch");
  const std::size_t layers = params.size() / 2;
  if (params[0].cols() != ds.features.cols()) throw DimMismatch("mlp input width != feature dim");

  MlpEval out;
  for (const auto& p : params) out.grad.emplace_back(p.rows(), p.cols());
  const double inv_b = 1.0 / static_cast<double>(ids.size());

  std::vector<std::vector<double>> acts(layers + 1);
  for (std::size_t id : ids) {
    const auto x = ds.features.row(id);
    acts[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < layers; ++l) {
      const Mat& w = params[2 * l];
      const Mat& b = params[2 * l + 1];
      auto& next = acts[l + 1];
      next.assign(w.rows(), 0.0);
      for (std::size_t o = 0; o < w.rows(); ++o) {
        double z = b[o];
        const auto wr = w.row(o);
        for (std::size_t i = 0; i < wr.size(); ++i) z += wr[i] * acts[l][i];
        next[o] = (l + 1 < layers) ? std::max(z, 0.0) : z;
      }
    }

    auto& logits = acts[layers];
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double z : logits) denom += std::exp(z - zmax);
    const std::size_t y = ds.labels[id];
    out.loss += (zmax + std::log(denom) - logits[y]) * inv_b;
    if (std::max_element(logits.begin(), logits.end()) - logits.begin() == static_cast<long>(y)) {
      ++out.correct;
    }

    std::vector<double> delta(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c) {
      delta[c] = (std::exp(logits[c] - zmax) / denom - (c == y ? 1.0 : 0.0)) * inv_b;
    }
    for (std::size_t l = layers; l-- > 0;) {
      const Mat& w = params[2 * l];
      Mat& gw = out.grad[2 * l];
      Mat& gb = out.grad[2 * l + 1];
      for (std::size_t o = 0; o < w.rows(); ++o) {
        auto gr = gw.row(o);
        for (std::size_t i = 0; i < gr.size(); ++i) gr[i] += delta[o] * acts[l][i];
        gb[o] += delta[o];
      }
      if (l == 0) break;
      std::vector<double> prev(w.cols(), 0.0);
      for (std::size_t o = 0; o < w.rows(); ++o) {
        const auto wr = w.row(o);
        for (std::size_t i = 0; i < wr.size(); ++i) prev[i] += wr[i] * delta[o];
      }
      for (std::size_t i = 0; i < prev.size(); ++i) {
        if (acts[l][i] <= 0.0) prev[i] = 0.0;
      }
      delta = std::move(prev);
    }
  }
  return out;
}

double mlp_accuracy(const Params& params, const SyntheticDataset& ds) {
  std::vector<std::size_t> ids(ds.labels.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  const MlpEval e = mlp_loss_grad(params, ds, ids);
  return static_cast<double>(e.correct) / static_cast<double>(ids.size());
}

Mat quadratic_curvatures(const ProblemSpec& spec) {
  const RngStream rng = init_stream(spec.dataset_seed, 2);
  Mat h(spec.m, spec.n);
  for (std::size_t k = 0; k < h.size(); ++k) {
    h[k] = spec.quad_hmin + (spec.quad_hmax - spec.quad_hmin) * rng.uniform(k);
  }
  return h;
}

std::unique_ptr<Problem> make_problem(const ProblemSpec& spec) {
  validate(spec);
  switch (spec.kind) {
    case ProblemKind::Rosenbrock:
      return std::make_unique<RosenbrockProblem>(spec);
    case ProblemKind::Quadratic:
      return std::make_unique<QuadraticProblem>(spec);
    case ProblemKind::SyntheticMlp:
      return std::make_unique<MlpProblem>(spec);
  }
  throw InvalidArgument("unknown problem kind");
}

const SyntheticDataset* problem_dataset(const Problem& p) noexcept {
  const auto* mlp = dynamic_cast<const MlpProblem*>(&p);
  return mlp ? &mlp->dataset() : nullptr;
}

}  // namespace lpopt
