// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lpopt/trainloop.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <future>

namespace lpopt {

namespace {

struct Pooled {
  double num_sq = 0.0;
  double den_sq = 0.0;

  void add(const Mat& raw, const Mat& q) {
    for (std::size_t k = 0; k < raw.size(); ++k) {
      const double d = q[k] - raw[k];
      num_sq += d * d;
      den_sq += raw[k] * raw[k];
    }
  }
  [[nodiscard]] std::optional<double> rel(bool enabled) const {
    if (!enabled || den_sq == 0.0) return std::nullopt;
    return std::sqrt(num_sq) / std::sqrt(den_sq);
  }
};

double sq_norm(const Params& p) {
  double acc = 0.0;
  for (const auto& m : p) {
    for (double v : m.data()) acc += v * v;
  }
  return acc;
}

double sq_dist(const Params& a, const Params& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < a[i].size(); ++k) {
      const double d = a[i][k] - b[i][k];
      acc += d * d;
    }
  }
  return acc;
}

double max_abs(const Params& p) {
  double m = 0.0;
  for (const auto& b : p) m = std::max(m, lpopt::max_abs(b));
  return m;
}

struct WorkerOutput {
  Params quantized;
  double loss = 0.0;
  double max_abs_sample = 0.0;
  Pooled err;
};

WorkerOutput run_worker(const Problem& problem, const Params& wq, const TrainConfig& cfg,
                        std::uint64_t t, std::size_t worker) {
  const RngStream noise = derive_stream(cfg.seed, StreamTag::GradNoise, worker, t);
  GradSample s = problem.sample_grad(wq, noise, cfg.problem.batch);
  WorkerOutput out;
  out.loss = s.value;
  out.max_abs_sample = max_abs(s.grad);
  out.quantized.reserve(s.grad.size());
  for (std::size_t b = 0; b < s.grad.size(); ++b) {
    const RngStream rng = derive_stream(cfg.seed, StreamTag::Gradients, worker, t, b);
    Mat q = quantize_mat(s.grad[b], cfg.policy.gradients, rng);
    out.err.add(s.grad[b], q);
    out.quantized.push_back(std::move(q));
  }
  return out;
}

}  // namespace

std::string_view to_string(OptimizerKind k) noexcept {
  return k == OptimizerKind::QAdam ? "adam" : "muon";
}

std::optional<OptimizerKind> parse_optimizer(std::string_view s) noexcept {
  if (s == "adam" || s == "qadam") return OptimizerKind::QAdam;
  if (s == "muon" || s == "qmuon") return OptimizerKind::QMuon;
  return std::nullopt;
}

void validate(const TrainConfig& cfg) {
  validate(cfg.problem);
  validate(cfg.policy);
  if (cfg.optimizer == OptimizerKind::QAdam) {
    validate(cfg.adam);
  } else {
    validate(cfg.muon);
  }
  if (cfg.T < 1) throw InvalidArgument("train.T must be >= 1");
  if (cfg.B < 1) throw InvalidArgument("train.B must be >= 1");
  if (cfg.telemetry_every < 1) throw InvalidArgument("train.telemetry_every must be >= 1");
  if (cfg.tail_window < 1) throw InvalidArgument("train.tail_window must be >= 1");
}

WorkerGradients gather_gradients(const Problem& problem, const Params& wq, const TrainConfig& cfg,
                                 std::uint64_t t) {
  std::vector<WorkerOutput> outs(cfg.B);
  if (cfg.parallel_workers && cfg.B > 1) {
    std::vector<std::future<WorkerOutput>> futures;
    futures.reserve(cfg.B);
    for (std::size_t i = 0; i < cfg.B; ++i) {
      futures.push_back(std::async(std::launch::async, run_worker, std::cref(problem),
                                   std::cref(wq), std::cref(cfg), t, i));
    }
    for (std::size_t i = 0; i < cfg.B; ++i) outs[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < cfg.B; ++i) outs[i] = run_worker(problem, wq, cfg, t, i);
  }

  WorkerGradients wg;
  wg.average = outs[0].quantized;
  for (std::size_t i = 1; i < cfg.B; ++i) {
    for (std::size_t b = 0; b < wg.average.size(); ++b) {
      wg.average[b] = add(wg.average[b], outs[i].quantized[b]);
    }
  }
  if (cfg.B > 1) {
    const double inv = 1.0 / static_cast<double>(cfg.B);
    for (auto& m : wg.average) m = scale(m, inv);
  }
  for (auto& o : outs) {
    wg.losses.push_back(o.loss);
    wg.max_abs_sample = std::max(wg.max_abs_sample, o.max_abs_sample);
    wg.qerr_num_sq += o.err.num_sq;
    wg.qerr_den_sq += o.err.den_sq;
    wg.per_worker.push_back(std::move(o.quantized));
  }
  return wg;
}

RunResult run_training(const TrainConfig& cfg) {
  validate(cfg);
  const auto problem = make_problem(cfg.problem);
  const bool is_adam = cfg.optimizer == OptimizerKind::QAdam;

  Params W = problem->init_params(cfg.seed);
  const std::size_t nb = W.size();
  std::vector<AdamState> adam(nb);
  std::vector<MuonState> muon(nb);

  RunResult res;
  res.config = cfg;
  TrajectoryStats& st = res.stats;
  st.grad_norm_sq.reserve(cfg.T);
  st.F0 = problem->value(W);
  st.W0_norm = std::sqrt(sq_norm(W));
  st.max_W_norm = st.W0_norm;

  std::vector<double> w0_block(nb);
  std::vector<double> growth_rate(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    w0_block[b] = frob_norm(W[b]);
    const double r = static_cast<double>(std::min(W[b].rows(), W[b].cols()));
    growth_rate[b] = cfg.muon.eta * std::sqrt(r * (1.0 + msign_norm_tolerance(cfg.muon.ortho.method)));
  }

  // Geometric brackets of the raw second moment.
  std::vector<Mat> v_lo(nb);
  std::vector<Mat> v_hi(nb);
  const double q_V = cfg.policy.q_V();
  const double v_weight = cfg.adam.variant == MomentVariant::WeightedAverage ? 1.0 - cfg.adam.beta2 : 1.0;

  Params prev_W;
  Params prev_grad;
  double tail_sum = 0.0;
  const std::uint64_t tail_start = cfg.T > cfg.tail_window ? cfg.T - cfg.tail_window : 0;

  for (std::uint64_t t = 0; t < cfg.T; ++t) {
    try {
      const auto start = std::chrono::steady_clock::now();

      const Params grad = problem->full_grad(W);
      const double loss = problem->value(W);
      const double gn_sq = sq_norm(grad);
      const double gn = std::sqrt(gn_sq);
      st.grad_norm_sq.push_back(gn_sq);
      st.max_abs_true_grad = std::max(st.max_abs_true_grad, max_abs(grad));
      if (t >= tail_start) tail_sum += gn;
      if (t > 0) {
        const double dx = std::sqrt(sq_dist(W, prev_W));
        if (dx > 0.0) st.L_estimate = std::max(st.L_estimate, std::sqrt(sq_dist(grad, prev_grad)) / dx);
      }

      Params wq;
      Pooled err_w;
      wq.reserve(nb);
      for (std::size_t b = 0; b < nb; ++b) {
        Mat q = quantize_mat(W[b], cfg.policy.weights,
                             derive_stream(cfg.seed, StreamTag::Weights, 0, t, b));
        err_w.add(W[b], q);
        wq.push_back(std::move(q));
      }

      const WorkerGradients wg = gather_gradients(*problem, wq, cfg, t);
      const double ghat_inf = max_abs(wg.average);
      st.max_abs_grad_hat = std::max(st.max_abs_grad_hat, ghat_inf);
      st.max_abs_sample_grad = std::max(st.max_abs_sample_grad, wg.max_abs_sample);
      if (ghat_inf > (1.0 + cfg.policy.q_G()) * wg.max_abs_sample * (1.0 + 1e-15)) {
        st.grad_hat_bound_ok = false;
      }
      st.max_noise_sq = std::max(st.max_noise_sq, sq_dist(wg.average, grad));

      Params next(nb);
      Pooled err_m;
      Pooled err_v;
      double upd_sq = 0.0;
      for (std::size_t b = 0; b < nb; ++b) {
        const RngStream rng = derive_stream(cfg.seed, StreamTag::Moment1, 0, t, b);
        const Mat& g = wg.average[b];
        if (is_adam) {
          AdamStepResult r = adam_step(W[b], g, cfg.adam, adam[b], cfg.policy, rng);
          err_m.add(r.M_raw, r.state.M);
          err_v.add(r.V_raw, r.state.V);
          if (t == 0) {
            v_lo[b] = Mat(g.rows(), g.cols());
            v_hi[b] = Mat(g.rows(), g.cols());
          }
          for (std::size_t k = 0; k < g.size(); ++k) {
            const double g2 = v_weight * g[k] * g[k];
            v_lo[b][k] = cfg.adam.beta2 * (1.0 - q_V) * v_lo[b][k] + g2;
            v_hi[b][k] = cfg.adam.beta2 * (1.0 + q_V) * v_hi[b][k] + g2;
            const double v = r.V_raw[k];
            if (v < v_lo[b][k] * (1.0 - 1e-12) || v > v_hi[b][k] * (1.0 + 1e-12)) {
              st.moment_sandwich_ok = false;
            }
          }
          upd_sq += frob_dot(r.update, r.update);
          next[b] = std::move(r.W);
          adam[b] = std::move(r.state);
        } else {
          MuonStepResult r = muon_step(W[b], g, cfg.muon, muon[b], cfg.policy, rng);
          err_m.add(r.M_raw, r.state.M);
          upd_sq += frob_dot(r.update, r.update);
          const double bound = w0_block[b] + static_cast<double>(t + 1) * growth_rate[b];
          if (frob_norm(r.W) > bound * (1.0 + 1e-12)) st.muon_growth_ok = false;
          next[b] = std::move(r.W);
          muon[b] = std::move(r.state);
        }
      }
      const double upd = std::sqrt(upd_sq);
      st.max_update_norm = std::max(st.max_update_norm, upd);

      if (t % cfg.telemetry_every == 0) {
        TrainRecord rec;
        rec.t = t;
        rec.loss = loss;
        rec.grad_norm_F = gn;
        rec.qerr_W = err_w.rel(cfg.policy.weights.enabled);
        rec.qerr_G = Pooled{wg.qerr_num_sq, wg.qerr_den_sq}.rel(cfg.policy.gradients.enabled);
        rec.qerr_M = err_m.rel(cfg.policy.moment1.enabled);
        if (is_adam) rec.qerr_V = err_v.rel(cfg.policy.moment2.enabled);
        rec.update_norm_F = upd;
        if (cfg.timing) {
          rec.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
        }
        res.records.push_back(rec);
      }

      prev_W = std::move(W);
      prev_grad = grad;
      W = std::move(next);
      st.max_W_norm = std::max(st.max_W_norm, std::sqrt(sq_norm(W)));
    } catch (const TrainingError&) {
      throw;
    } catch (const Error& e) {
      throw TrainingError(t, e.what());
    }
  }

  res.tail_grad_norm = tail_sum / static_cast<double>(cfg.T - tail_start);
  res.final_loss = problem->value(W);
  res.checksum = params_checksum(W);
  res.final_W = std::move(W);
  return res;
}

std::vector<RunResult> sweep(const TrainConfig& base, const std::vector<int>& mantissas,
                             const ComponentMask& components) {
  if (mantissas.empty()) throw InvalidArgument("sweep: empty mantissa list");
  std::vector<RunResult> out;
  out.reserve(mantissas.size());
  for (int m : mantissas) {
    TrainConfig cfg = base;
    auto apply = [m](bool on, QuantSpec& spec) {
      if (on) spec = QuantSpec::bits(m, spec.rounding);
    };
    apply(components.weights, cfg.policy.weights);
    apply(components.gradients, cfg.policy.gradients);
    apply(components.moment1, cfg.policy.moment1);
    apply(components.moment2, cfg.policy.moment2);
    out.push_back(run_training(cfg));
  }
  return out;
}

std::uint64_t params_checksum(const Params& p) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
      h ^= (word >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& m : p) {
    mix(m.rows());
    mix(m.cols());
    for (double v : m.data()) mix(std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

double tail_mean_grad_norm(const std::vector<TrainRecord>& records, std::size_t window) {
  if (records.empty()) throw InvalidArgument("tail_mean_grad_norm: no records");
  const std::size_t start = records.size() > window ? records.size() - window : 0;
  double sum = 0.0;
  for (std::size_t i = start; i < records.size(); ++i) sum += records[i].grad_norm_F;
  return sum / static_cast<double>(records.size() - start);
}

}  // namespace lpopt
