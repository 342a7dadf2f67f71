// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lpopt/lemmas.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "lpopt/densemat.hpp"
#include "lpopt/fpquant.hpp"
#include "lpopt/optim.hpp"
#include "lpopt/rng.hpp"

namespace lpopt {

namespace {

constexpr double kFloatSlack = 1e-12;

/// Sequential draws from a counter-based stream.
class Draws {
 public:
  explicit Draws(RngStream s) : s_(s) {}
  double uniform() { return s_.uniform(next_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  double normal() { return s_.normal(next_++); }
  std::uint64_t integer(std::uint64_t lo, std::uint64_t hi) {  // inclusive
    return lo + s_.bits(next_++) % (hi - lo + 1);
  }
  bool coin() { return (s_.bits(next_++) & 1) != 0; }
  RngStream stream() { return s_.fork(next_++); }

 private:
  RngStream s_;
  std::uint64_t next_ = 0;
};

/// Tracks the worst lhs/rhs over all trials of one lemma.
class Tally {
 public:
  explicit Tally(std::string name) { r_.name = std::move(name); }

  // lhs <= rhs * (1 + slack) + abs_slack must hold.
  void check(double lhs, double rhs, double slack, const std::function<std::string()>& witness,
             double abs_slack = 0.0) {
    const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? INFINITY : 0.0);
    r_.max_ratio = std::max(r_.max_ratio, ratio);
    if (!(lhs <= rhs * (1.0 + slack) + abs_slack) && !(lhs == 0.0 && rhs == 0.0)) {
      if (r_.violations++ == 0) {
        std::ostringstream os;
        os.precision(17);
        os << witness() << " lhs=" << lhs << " rhs=" << rhs;
        r_.witness = os.str();
      }
    }
  }
  void trial() { ++r_.trials; }
  LemmaResult take() { return std::move(r_); }

 private:
  LemmaResult r_;
};

std::vector<double> random_sequence(Draws& dr, std::size_t n) {
  const double scale = dr.log_uniform(1e-3, 1e3);
  std::vector<double> g(n);
  for (auto& v : g) v = dr.coin() || dr.coin() ? scale * dr.normal() : 0.0;
  if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) g[0] = scale;
  return g;
}

std::string seq_head(std::span<const double> g) {
  std::ostringstream os;
  os.precision(17);
  os << "len=" << g.size() << " g0=" << (g.empty() ? 0.0 : g[0]);
  return os.str();
}

Rounding random_mode(Draws& dr) {
  switch (dr.integer(0, 2)) {
    case 0:
      return Rounding::Truncate;
    case 1:
      return Rounding::NearestEven;
    default:
      return Rounding::Stochastic;
  }
}

LemmaResult run_sum_ratio(Draws& dr, std::uint64_t trials) {
  Tally tally("sum ratio");
  for (std::uint64_t i = 0; i < trials; ++i) {
    tally.trial();
    const double beta1 = dr.uniform(0.01, 0.99);
    const double beta2 = dr.coin() && dr.coin() ? 1.0 : dr.uniform(beta1, 1.0);
    if (!(beta1 < beta2)) continue;
    const double eps = dr.log_uniform(1e-10, 1.0);
    const auto a = random_sequence(dr, dr.integer(1, 200));
    // Every prefix n is itself an instance.
    double b = 0.0;
    double c = 0.0;
    double lhs = 0.0;
    const double denom = (1.0 - beta1) * (1.0 - beta1 / beta2);
    for (std::size_t n = 0; n < a.size(); ++n) {
      b = beta2 * b + a[n] * a[n];
      c = beta1 * c + a[n];
      lhs += c * c / (eps + b);
      const double rhs = (std::log1p(b / eps) - static_cast<double>(n + 1) * std::log(beta2)) / denom;
      tally.check(lhs, rhs, kFloatSlack, [&] {
        std::ostringstream os;
        os << "beta1=" << beta1 << " beta2=" << beta2 << " eps=" << eps << " n=" << n + 1;
        return os.str();
      });
    }
  }
  return tally.take();
}

double random_rho(Draws& dr) {
  return dr.coin() ? dr.uniform(1e-6, 1.0 - 1e-6) : 1.0 - dr.log_uniform(1e-3, 0.5);
}

LemmaResult run_geom_sqrt(Draws& dr, std::uint64_t trials) {
  Tally tally("geometric sqrt sum");
  for (std::uint64_t i = 0; i < trials; ++i) {
    tally.trial();
    const double rho = random_rho(dr);
    const std::uint64_t K = dr.integer(1, 3000);
    tally.check(geom_sqrt_sum(rho, K), geom_sqrt_bound(rho), kFloatSlack, [&] {
      std::ostringstream os;
      os << "rho=" << rho << " K=" << K;
      return os.str();
    });
  }
  return tally.take();
}

LemmaResult run_geom_k32(Draws& dr, std::uint64_t trials) {
  Tally tally("geometric k^1.5 sum");
  for (std::uint64_t i = 0; i < trials; ++i) {
    tally.trial();
    const double rho = random_rho(dr);
    const std::uint64_t K = dr.integer(1, 3000);
    tally.check(geom_k32_sum(rho, K), geom_k32_bound(rho), kFloatSlack, [&] {
      std::ostringstream os;
      os << "rho=" << rho << " K=" << K;
      return os.str();
    });
  }
  return tally.take();
}

LemmaResult run_cauchy(Draws& dr, std::uint64_t trials) {
  Tally tally("finite Cauchy ratio");
  for (std::uint64_t i = 0; i < trials; ++i) {
    tally.trial();
    const double b = dr.uniform(1e-3, 1.0 - 1e-9);
    const double a = std::sqrt(b) * dr.uniform(1e-3, 1.0 - 1e-6);
    const auto g = random_sequence(dr, dr.integer(1, 200));
    for (std::size_t t = 1; t <= g.size(); ++t) {
      const std::span<const double> prefix(g.data(), t);
      if (std::all_of(prefix.begin(), prefix.end(), [](double v) { return v == 0.0; })) continue;
      tally.check(cauchy_ratio(prefix, a, b), cauchy_bound(a, b), kFloatSlack, [&] {
        std::ostringstream os;
        os << "a=" << a << " b=" << b << " " << seq_head(prefix);
        return os.str();
      });
    }
  }
  return tally.take();
}

LemmaResult run_refined_cauchy(Draws& dr, std::uint64_t trials) {
  Tally tally("refined Cauchy ratio");
  for (std::uint64_t i = 0; i < trials; ++i) {
    tally.trial();
    double beta1 = 0.0;
    double beta2 = 0.0;
    double qm = 0.0;
    double qv = 0.0;
    do {
      beta1 = dr.uniform(0.01, 0.99);
      beta2 = dr.uniform(0.5, 1.0 - 1e-6);
      qm = dr.log_uniform(1e-8, 0.5);
      qv = dr.log_uniform(1e-8, 0.5);
    } while (!(beta1 * beta1 * (1 + qm) * (1 + qm) < beta2 * (1 - qv)));
    const auto g = random_sequence(dr, dr.integer(1, 200));
    const double bound = refined_cauchy_bound(beta1, beta2, qm, qv);
    for (std::size_t t = 1; t <= g.size(); ++t) {
      const std::span<const double> prefix(g.data(), t);
      if (std::all_of(prefix.begin(), prefix.end(), [](double v) { return v == 0.0; })) continue;
      tally.check(refined_cauchy_ratio(prefix, beta1, beta2, qm, qv), bound, kFloatSlack, [&] {
        std::ostringstream os;
        os << "beta1=" << beta1 << " beta2=" << beta2 << " q_M=" << qm << " q_V=" << qv << " "
           << seq_head(prefix);
        return os.str();
      });
    }
  }
  return tally.take();
}

LemmaResult run_discrete_error(Draws& dr, std::uint64_t trials) {
  Tally tally("discrete error");
  for (std::uint64_t i = 0; i < trials; ++i) {
    tally.trial();
    const double k = dr.uniform(0.01, 0.999);
    const double q = k * dr.uniform(0.0, 1.0);
    const std::size_t n = dr.integer(2, 200);
    std::vector<double> d = random_sequence(dr, n);
    d[0] = 0.0;
    std::vector<double> rel(n);
    for (auto& r : rel) {
      switch (dr.integer(0, 2)) {
        case 0:
          r = q;
          break;
        case 1:
          r = -q;
          break;
        default:
          r = dr.uniform(-q, q);
      }
    }
    const SumRatio worst = discrete_error(d, rel, k, q);
    // Both sides are differences of terms as large as sum |d| (k(1+q))^e.
    double mag = 0.0;
    double pw = 1.0;
    double dmax = 0.0;
    for (std::size_t e = 0; e < n; ++e) {
      dmax = std::max(dmax, std::abs(d[e]));
      mag += pw;
      pw *= k * (1.0 + q);
    }
    const double rounding = 8.0 * static_cast<double>(n) * std::numeric_limits<double>::epsilon() * dmax * mag;
    tally.check(
        worst.lhs, worst.rhs, kFloatSlack,
        [&] {
          std::ostringstream os;
          os << "k=" << k << " q=" << q << " n=" << n;
          return os.str();
        },
        rounding);
  }
  return tally.take();
}

LemmaResult run_moment_sandwich(Draws& dr, std::uint64_t trials) {
  Tally tally("moment sandwich");
  for (std::uint64_t i = 0; i < trials; ++i) {
    tally.trial();
    const double beta2 = dr.uniform(0.5, 0.9999);
    const int m = static_cast<int>(dr.integer(1, 23));
    const QuantSpec spec = QuantSpec::bits(m, random_mode(dr));
    const double q = spec.bound();
    const RngStream rng = dr.stream();
    const auto g = random_sequence(dr, dr.integer(1, 200));
    double vq = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    for (std::size_t t = 0; t < g.size(); ++t) {
      const double v = (t == 0 ? 0.0 : beta2 * vq) + g[t] * g[t];
      lo = beta2 * (1.0 - q) * lo + g[t] * g[t];
      hi = beta2 * (1.0 + q) * hi + g[t] * g[t];
      auto witness = [&] {
        std::ostringstream os;
        os << "beta2=" << beta2 << " M=" << m << " mode=" << to_string(spec.rounding) << " t=" << t;
        return os.str();
      };
      tally.check(lo, v, kFloatSlack, witness);
      tally.check(v, hi, kFloatSlack, witness);
      vq = quantize_scalar(v, spec, rng.advanced(t));
    }
  }
  return tally.take();
}

LemmaResult run_matrix_quant(Draws& dr, std::uint64_t trials) {
  Tally tally("matrix quantization error");
  for (std::uint64_t i = 0; i < trials; ++i) {
    tally.trial();
    const std::size_t rows = dr.integer(1, 8);
    const std::size_t cols = dr.integer(1, 8);
    Mat x(rows, cols);
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] = (dr.coin() ? 1.0 : -1.0) * dr.log_uniform(0x1p-60, 0x1p60);
    }
    const int m = static_cast<int>(dr.integer(0, 30));
    const QuantSpec spec = QuantSpec::bits(m, random_mode(dr));
    const Mat xq = quantize_mat(x, spec, dr.stream());
    tally.check(frob_norm(sub(xq, x)), spec.bound() * frob_norm(x), kFloatSlack, [&] {
      std::ostringstream os;
      os << rows << "x" << cols << " M=" << m << " mode=" << to_string(spec.rounding);
      return os.str();
    });
  }
  return tally.take();
}

Mat random_mat(Draws& dr, std::size_t rows, std::size_t cols, double scale) {
  Mat a(rows, cols);
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = scale * dr.normal();
  return a;
}

LemmaResult run_muon_growth(Draws& dr, std::uint64_t trials) {
  Tally tally("Muon weight growth");
  for (std::uint64_t i = 0; i < trials; ++i) {
    tally.trial();
    const std::size_t rows = dr.integer(1, 6);
    const std::size_t cols = dr.integer(1, 6);
    MuonHyper h;
    h.eta = dr.log_uniform(1e-4, 1.0);
    h.beta = dr.uniform(0.0, 0.99);
    if (h.beta == 0.0) h.beta = 0.5;
    h.ortho.method = dr.coin() ? OrthoMethod::ExactSvd : OrthoMethod::NewtonSchulz;
    const QuantPolicy policy = QuantPolicy::uniform(static_cast<int>(dr.integer(2, 30)));
    const double r = static_cast<double>(std::min(rows, cols));
    const double step = h.eta * std::sqrt(r * (1.0 + msign_norm_tolerance(h.ortho.method)));
    Mat w = random_mat(dr, rows, cols, dr.log_uniform(1e-2, 1e2));
    const double w0 = frob_norm(w);
    MuonState s;
    const std::size_t steps = dr.integer(1, 12);
    const RngStream rng = dr.stream();
    for (std::size_t t = 0; t < steps; ++t) {
      const Mat g = random_mat(dr, rows, cols, dr.log_uniform(1e-3, 1e3));
      MuonStepResult res = muon_step(w, g, h, s, policy, rng.fork(t));
      w = std::move(res.W);
      s = std::move(res.state);
      tally.check(frob_norm(w), w0 + static_cast<double>(t + 1) * step, kFloatSlack, [&] {
        std::ostringstream os;
        os << rows << "x" << cols << " eta=" << h.eta << " beta=" << h.beta << " t=" << t + 1;
        return os.str();
      });
    }
  }
  return tally.take();
}

LemmaResult run_grad_estimator(Draws& dr, std::uint64_t trials) {
  Tally tally("gradient estimator bound");
  for (std::uint64_t i = 0; i < trials; ++i) {
    tally.trial();
    const double eps = dr.log_uniform(1e-12, 1e-2);
    const double cap = dr.log_uniform(1e-3, 1e3);  // R - sqrt(eps)
    const std::size_t B = dr.integer(1, 8);
    const std::size_t n = dr.integer(1, 32);
    const QuantSpec spec = QuantSpec::bits(static_cast<int>(dr.integer(1, 23)), random_mode(dr));
    Mat avg(1, n);
    for (std::size_t w = 0; w < B; ++w) {
      Mat g(1, n);
      for (std::size_t k = 0; k < n; ++k) {
        g[k] = dr.coin() ? cap * dr.uniform(-1.0, 1.0) : (dr.coin() ? cap : -cap);
      }
      avg = add(avg, quantize_mat(g, spec, dr.stream()));
    }
    avg = scale(avg, 1.0 / static_cast<double>(B));
    tally.check(max_abs(avg), (1.0 + spec.bound()) * cap, kFloatSlack, [&] {
      std::ostringstream os;
      os << "B=" << B << " M=" << spec.mantissa_bits << " eps=" << eps;
      return os.str();
    });
  }
  return tally.take();
}

LemmaResult run_adam_update(Draws& dr, std::uint64_t trials) {
  Tally tally("Adam update magnitude");
  for (std::uint64_t i = 0; i < trials; ++i) {
    tally.trial();
    AdamHyper h;
    h.beta1 = dr.uniform(0.0, 0.95);
    h.beta2 = dr.uniform(0.9, 0.9999);
    h.epsilon = dr.log_uniform(1e-12, 1e-4);
    h.eta = dr.log_uniform(1e-5, 1e-1);
    h.schedule = dr.coin() ? StepSchedule::Omega : StepSchedule::Constant;
    const QuantPolicy policy = QuantPolicy::uniform(static_cast<int>(dr.integer(4, 30)));
    const double rp = h.beta1 * h.beta1 * (1 + policy.q_M()) * (1 + policy.q_M()) /
                      (h.beta2 * (1 - policy.q_V()));
    if (!(rp < 1.0)) continue;
    const double ucoord = 1.0 / std::sqrt(1.0 - rp);
    const std::size_t n = dr.integer(1, 8);
    Mat w(1, n);
    AdamState s;
    const std::size_t steps = dr.integer(1, 60);
    const RngStream rng = dr.stream();
    const double gscale = dr.log_uniform(1e-3, 1e3);
    for (std::size_t t = 0; t < steps; ++t) {
      Mat g = random_mat(dr, 1, n, gscale);
      AdamStepResult res = adam_step(w, g, h, s, policy, rng.fork(t));
      const double eta_t = adam_step_size(h, t);
      tally.check(max_abs(res.update), eta_t * ucoord, kFloatSlack, [&] {
        std::ostringstream os;
        os << "beta1=" << h.beta1 << " beta2=" << h.beta2 << " t=" << t;
        return os.str();
      });
      w = std::move(res.W);
      s = std::move(res.state);
    }
  }
  return tally.take();
}

LemmaResult run_muon_update_norm(Draws& dr, std::uint64_t trials) {
  Tally tally("Muon update norm");
  for (std::uint64_t i = 0; i < trials; ++i) {
    tally.trial();
    const std::size_t rows = dr.integer(1, 10);
    const std::size_t cols = dr.integer(1, 10);
    MsignOptions opts;
    opts.method = dr.coin() ? OrthoMethod::ExactSvd : OrthoMethod::NewtonSchulz;
    const Mat a = random_mat(dr, rows, cols, dr.log_uniform(1e-6, 1e6));
    const double r = static_cast<double>(std::min(rows, cols));
    const double lhs = frob_norm(msign(a, opts));
    tally.check(lhs * lhs, r * (1.0 + msign_norm_tolerance(opts.method)), 0.0, [&] {
      std::ostringstream os;
      os << rows << "x" << cols << (opts.method == OrthoMethod::ExactSvd ? " svd" : " ns");
      return os.str();
    });
  }
  return tally.take();
}

}  // namespace

bool LemmaSuiteReport::ok() const noexcept {
  return std::all_of(results.begin(), results.end(),
                     [](const LemmaResult& r) { return r.violations == 0; });
}

double geom_sqrt_sum(double rho, std::uint64_t K) {
  double acc = 0.0;
  double p = 1.0;
  for (std::uint64_t k = 0; k < K; ++k) {
    acc += p * std::sqrt(static_cast<double>(k + 1));
    p *= rho;
    if (p == 0.0) break;
  }
  return acc;
}

double geom_sqrt_bound(double rho) { return 2.0 / std::pow(1.0 - rho, 1.5); }

double geom_k32_sum(double rho, std::uint64_t K) {
  double acc = 0.0;
  double p = 1.0;
  for (std::uint64_t k = 0; k < K; ++k) {
    const auto kd = static_cast<double>(k);
    acc += p * std::sqrt(kd) * (kd + 1.0);
    p *= rho;
    if (p == 0.0) break;
  }
  return acc;
}

double geom_k32_bound(double rho) { return 4.0 * rho / std::pow(1.0 - rho, 2.5); }

SumRatio sum_ratio(std::span<const double> a, double beta1, double beta2, double eps) {
  double b = 0.0;
  double c = 0.0;
  SumRatio out;
  for (double v : a) {
    b = beta2 * b + v * v;
    c = beta1 * c + v;
    out.lhs += c * c / (eps + b);
  }
  out.rhs = (std::log1p(b / eps) - static_cast<double>(a.size()) * std::log(beta2)) /
            ((1.0 - beta1) * (1.0 - beta1 / beta2));
  return out;
}

double cauchy_ratio(std::span<const double> g, double a, double b) {
  double num = 0.0;
  double den = 0.0;
  double pa = 1.0;
  double pb = 1.0;
  for (double v : g) {
    num += pa * std::abs(v);
    den += pb * v * v;
    pa *= a;
    pb *= b;
  }
  return num / std::sqrt(den);
}

double cauchy_bound(double a, double b) { return std::sqrt(1.0 / (1.0 - a * a / b)); }

double refined_cauchy_ratio(std::span<const double> g, double beta1, double beta2, double q_M,
                            double q_V) {
  double num = 0.0;
  double den = 0.0;
  const double lq = std::log1p(q_M);
  double pb1 = 1.0;
  double pb = 1.0;
  const double bv = beta2 * (1.0 - q_V);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double A = pb1 * std::expm1(static_cast<double>(k) * lq);
    num += A * std::abs(g[k]);
    den += pb * g[k] * g[k];
    pb1 *= beta1;
    pb *= bv;
  }
  return num / std::sqrt(den);
}

double refined_cauchy_bound(double beta1, double beta2, double q_M, double q_V) {
  const double rp = beta1 * beta1 * (1.0 + q_M) * (1.0 + q_M) / (beta2 * (1.0 - q_V));
  return q_M * std::sqrt(rp * (1.0 + rp)) / ((1.0 + q_M) * std::pow(1.0 - rp, 1.5));
}

SumRatio discrete_error(std::span<const double> d, std::span<const double> rel, double k, double q) {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  // bound_t = P_t - K_t with P_t = k(1+q)(P_{t-1} + |d_{t-1}|), K_t = k(K_{t-1} + |d_{t-1}|).
  double P = 0.0;
  double K = 0.0;
  double d_prev = 0.0;
  SumRatio worst{0.0, 0.0};
  double worst_excess = -INFINITY;
  for (std::size_t t = 1; t < d.size(); ++t) {
    a = k * (a + c) + d[t];
    b = k * b + d[t];
    c = rel[t] * a;
    P = k * (1.0 + q) * (P + d_prev);
    K = k * (K + d_prev);
    d_prev = std::abs(d[t]);
    const double lhs = std::abs(a - b);
    const double rhs = P - K;
    const double scale = std::max(rhs, 1e-300);
    const double excess = (lhs - rhs) / scale;
    if (excess > worst_excess) {
      worst_excess = excess;
      worst = {lhs, rhs};
    }
  }
  return worst;
}

LemmaSuiteReport check_lemma_suite(std::uint64_t seed, std::uint64_t trials,
                                   bool throw_on_violation) {
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  using Runner = LemmaResult (*)(Draws&, std::uint64_t);
  const Runner runners[] = {run_sum_ratio,       run_geom_sqrt,      run_geom_k32,
                            run_cauchy,          run_refined_cauchy, run_discrete_error,
                            run_moment_sandwich, run_matrix_quant,   run_muon_growth,
                            run_grad_estimator,  run_adam_update,    run_muon_update_norm};
  LemmaSuiteReport rep;
  std::uint64_t id = 0;
  for (Runner run : runners) {
    Draws dr(RngStream{seed, mix64(0x4c454d4dULL + id++), 0});
    rep.results.push_back(run(dr, trials));
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (throw_on_violation) {
    for (const auto& r : rep.results) {
      if (r.violations > 0) throw LemmaViolated(r.name, r.witness);
    }
  }
  return rep;
}

}  // namespace lpopt
