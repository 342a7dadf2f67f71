// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

// Objectives and stochastic gradient oracles.
//
// Parameters are a list of matrix blocks. Rosenbrock and Quadratic use a
// single m x n block; the MLP uses (W_l, b_l) per layer with W_l of shape
// out x in and b_l of shape 1 x out.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "lpopt/densemat.hpp"
#include "lpopt/rng.hpp"

namespace lpopt {

using Params = std::vector<Mat>;

enum class ProblemKind { Rosenbrock, SyntheticMlp, Quadratic };

[[nodiscard]] std::string_view to_string(ProblemKind k) noexcept;
[[nodiscard]] std::optional<ProblemKind> parse_problem_kind(std::string_view s) noexcept;

struct ProblemSpec {
  ProblemKind kind = ProblemKind::Rosenbrock;
  std::size_t m = 50;
  std::size_t n = 100;
  double noise_sigma = 0.0;  // per-entry gradient noise std at batch 1
  double init_mean = 1.0;
  double init_std = 0.1;

  // SyntheticMlp: layer widths from input dimension to class count.
  std::vector<std::size_t> mlp_layers{16, 32, 4};
  std::uint64_t dataset_seed = 0;
  std::size_t dataset_size = 512;
  std::size_t num_classes = 4;
  double class_sep = 4.0;  // distance between class means, in blob std units

  // Quadratic: curvatures drawn uniformly from [quad_hmin, quad_hmax].
  double quad_hmin = 0.5;
  double quad_hmax = 2.0;

  std::size_t batch = 1;   // samples per worker per iteration
  double grad_clip = 0.0;  // entrywise clip of sampled gradients; 0 disables
};

/// Throws InvalidArgument on inconsistent settings.
void validate(const ProblemSpec& spec);

struct GradSample {
  double value = 0.0;  // minibatch loss (exact objective when noise-free)
  Params grad;
  std::vector<std::size_t> batch_ids;
};

// Rosenbrock over the columns of W:
//   F(W) = sum_{j<n-1} 100 ||W_{j+1} - W_j^2||^2 + ||1 - W_j||^2.
[[nodiscard]] double rosenbrock_value(const Mat& w);
[[nodiscard]] Mat rosenbrock_grad(const Mat& w);

struct SyntheticDataset {
  Mat features;  // N x dim
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const SyntheticDataset&, const SyntheticDataset&) = default;
};

/// Gaussian blobs with unit variance; labels assigned round-robin.
[[nodiscard]] SyntheticDataset make_synthetic_dataset(const ProblemSpec& spec);

void write_dataset(std::ostream& os, const SyntheticDataset& ds);
[[nodiscard]] SyntheticDataset read_dataset(std::istream& is);

/// Mean softmax cross-entropy of the MLP on the listed samples, with its
/// gradient in parameter-block layout.
struct MlpEval {
  double loss = 0.0;
  Params grad;
  std::size_t correct = 0;
};
[[nodiscard]] MlpEval mlp_loss_grad(const Params& params, const SyntheticDataset& ds,
                                    std::span<const std::size_t> ids);
[[nodiscard]] double mlp_accuracy(const Params& params, const SyntheticDataset& ds);

class Problem {
 public:
  virtual ~Problem() = default;

  [[nodiscard]] const ProblemSpec& spec() const noexcept { return spec_; }

  [[nodiscard]] virtual Params init_params(std::uint64_t seed) const = 0;
  [[nodiscard]] virtual double value(const Params& w) const = 0;
  [[nodiscard]] virtual Params full_grad(const Params& w) const = 0;
  /// Unbiased gradient estimate at `w`; deterministic in `rng`.
  [[nodiscard]] virtual GradSample sample_grad(const Params& w, RngStream rng,
                                               std::size_t batch) const = 0;
  /// Known global minimum value, if any.
  [[nodiscard]] virtual std::optional<double> optimum_value() const { return std::nullopt; }

 protected:
  explicit Problem(ProblemSpec spec) : spec_(std::move(spec)) {}

 private:
  ProblemSpec spec_;
};

[[nodiscard]] std::unique_ptr<Problem> make_problem(const ProblemSpec& spec);

/// Curvatures of the Quadratic problem F(W) = 1/2 sum h_k W_k^2.
[[nodiscard]] Mat quadratic_curvatures(const ProblemSpec& spec);

/// Access to the dataset behind a SyntheticMlp problem; nullptr otherwise.
[[nodiscard]] const SyntheticDataset* problem_dataset(const Problem& p) noexcept;

}  // namespace lpopt
