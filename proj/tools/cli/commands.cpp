// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "lpopt/lemmas.hpp"
#include "lpopt/theory.hpp"

namespace lpopt::cli {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  return f;
}

void write_records(const fs::path& base, OutputFormat fmt, const std::vector<TrainRecord>& recs) {
  if (fmt == OutputFormat::Csv) {
    auto f = open_out(base.string() + ".csv");
    write_csv(f, recs);
  } else {
    auto f = open_out(base.string() + ".jsonl");
    write_jsonl(f, recs);
  }
}

std::optional<double> mean_of(const std::vector<TrainRecord>& recs,
                              std::optional<double> TrainRecord::*field) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : recs) {
    if (const auto& v = r.*field) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::string opt_str(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

constexpr const char* kPlotStub = R"(#!/usr/bin/env python3
# Plots sweep_summary.csv and the per-M gradient-norm curves.
import csv, glob, sys
import matplotlib.pyplot as plt

d = sys.argv[1] if len(sys.argv) > 1 else "."
fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
for path in sorted(glob.glob(f"{d}/run_M*.csv"), key=lambda p: int(p.split("_M")[-1][:-4])):
    rows = list(csv.DictReader(open(path)))
    a.semilogy([int(r["t"]) for r in rows], [float(r["grad_norm_F"]) for r in rows],
               label=path.split("/")[-1][4:-4])
a.set_xlabel("iteration"); a.set_ylabel("||grad F||_F"); a.legend()
rows = list(csv.DictReader(open(f"{d}/sweep_summary.csv")))
b.semilogy([int(r["M"]) for r in rows], [float(r["tail_grad_norm"]) for r in rows], "o-")
b.set_xlabel("mantissa bits M"); b.set_ylabel("tail grad norm")
fig.tight_layout(); fig.savefig(f"{d}/sweep.png", dpi=120)
)";

void print_report(std::ostream& out, const FlatReport& r) {
  for (const auto& [k, v] : r) out << k << " = " << format_double(v) << '\n';
}

}  // namespace

int cmd_run(const CliConfig& cfg, std::ostream& out) {
  const RunResult res = run_training(cfg.train);
  fs::create_directories(cfg.output_dir);
  write_records(cfg.output_dir / "run", cfg.format, res.records);
  auto s = open_out(cfg.output_dir / "summary.txt");
  s << "tail_grad_norm = " << format_double(res.tail_grad_norm) << '\n'
    << "final_loss = " << format_double(res.final_loss) << '\n'
    << "checksum = " << res.checksum << '\n'
    << "# config\n"
    << echo(cfg);
  out << "tail_grad_norm " << format_double(res.tail_grad_norm) << "  final_loss "
      << format_double(res.final_loss) << "  rows " << res.records.size() << '\n';
  return kExitOk;
}

int cmd_sweep(const CliConfig& cfg, std::ostream& out) {
  if (cfg.mantissas.empty()) throw ConfigError("empty mantissa list");
  for (int m : cfg.mantissas) {
    if (m < 0 || m > kHostMantissaBits) throw ConfigError("mantissa out of range: " + std::to_string(m));
  }
  std::vector<RunResult> results;
  if (cfg.jobs <= 1) {
    results = sweep(cfg.train, cfg.mantissas, cfg.components);
  } else {
    // Runs are independent; results are collected in list order.
    std::vector<std::future<RunResult>> pending;
    std::size_t next = 0;
    results.resize(cfg.mantissas.size());
    std::vector<std::size_t> slot;
    while (next < cfg.mantissas.size() || !pending.empty()) {
      while (pending.size() < cfg.jobs && next < cfg.mantissas.size()) {
        const int m = cfg.mantissas[next];
        pending.push_back(std::async(std::launch::async, [&cfg, m] {
          return sweep(cfg.train, {m}, cfg.components).front();
        }));
        slot.push_back(next++);
      }
      results[slot.front()] = pending.front().get();
      pending.erase(pending.begin());
      slot.erase(slot.begin());
    }
  }
  fs::create_directories(cfg.output_dir);
  auto summary = open_out(cfg.output_dir / "sweep_summary.csv");
  summary << "M,tail_grad_norm,final_loss,mean_qerr_W,mean_qerr_G,mean_qerr_M,mean_qerr_V\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const int m = cfg.mantissas[i];
    const auto& r = results[i];
    write_records(cfg.output_dir / ("run_M" + std::to_string(m)), cfg.format, r.records);
    summary << m << ',' << format_double(r.tail_grad_norm) << ',' << format_double(r.final_loss)
            << ',' << opt_str(mean_of(r.records, &TrainRecord::qerr_W)) << ','
            << opt_str(mean_of(r.records, &TrainRecord::qerr_G)) << ','
            << opt_str(mean_of(r.records, &TrainRecord::qerr_M)) << ','
            << opt_str(mean_of(r.records, &TrainRecord::qerr_V)) << '\n';
    out << "M=" << m << "  tail_grad_norm " << format_double(r.tail_grad_norm) << '\n';
  }
  auto plot = open_out(cfg.output_dir / "plot_sweep.py");
  plot << kPlotStub;
  return kExitOk;
}

int cmd_bounds(const BoundsParams& p, bool grid, std::ostream& out, std::ostream& err) {
  const bool adam = p.theorem == OptimizerKind::QAdam;
  if (grid) {
    const auto rows = adam ? adam_schedule_grid(p.adam, p.grid_T)
                           : muon_schedule_grid(p.muon, p.grid_T, p.grid_q_scale, p.grid_q_power);
    out << (adam ? "T,total,total*sqrt(T)/ln(T)\n" : "T,total,total*T^(1/4)\n");
    for (const auto& r : rows) {
      out << format_double(r.T) << ',' << format_double(r.total) << ',' << format_double(r.scaled)
          << '\n';
    }
    out << "max consecutive ratio (T >= 1000) = "
        << format_double(max_consecutive_ratio(rows, 1e3)) << '\n';
    return kExitOk;
  }
  const auto violated = adam ? adam_preconditions(p.adam) : muon_preconditions(p.muon);
  if (!violated.empty()) {
    for (const auto& v : violated) err << "precondition violated: " << v << '\n';
    return kExitPrecondition;
  }
  if (adam) {
    print_report(out, flatten(adam_bound(p.adam)));
  } else {
    print_report(out, flatten(muon_bound(p.muon)));
  }
  return kExitOk;
}

int cmd_lemmas(std::uint64_t seed, std::uint64_t trials, std::ostream& out) {
  const auto rep = check_lemma_suite(seed, trials);
  for (const auto& r : rep.results) {
    out << std::left << std::setw(28) << r.name << " trials " << r.trials << "  violations "
        << r.violations << "  max lhs/rhs " << format_double(r.max_ratio) << '\n';
    if (r.violations) out << "  witness: " << r.witness << '\n';
  }
  out << "elapsed " << format_double(std::round(rep.seconds * 1000.0) / 1000.0) << " s\n";
  return rep.ok() ? kExitOk : kExitRuntime;
}

int cmd_dataset_gen(const CliConfig& cfg, const fs::path& file, std::ostream& out) {
  const auto ds = make_synthetic_dataset(cfg.train.problem);
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  auto f = open_out(file);
  write_dataset(f, ds);
  out << "wrote " << ds.labels.size() << " samples of dim " << ds.features.cols() << " to "
      << file.string() << '\n';
  return kExitOk;
}

Summary read_summary(const fs::path& file) {
  const auto kvs = read_key_values(file);
  Summary s;
  bool tail = false;
  bool loss = false;
  for (const auto& [k, v] : kvs) {
    if (k == "tail_grad_norm") {
      s.tail_grad_norm = std::stod(v);
      tail = true;
    } else if (k == "final_loss") {
      s.final_loss = std::stod(v);
      loss = true;
    }
  }
  if (!tail || !loss) throw ConfigError("incomplete summary " + file.string());
  return s;
}

namespace {

struct CommonFlags {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, CommonFlags& f, bool config_required) {
  sub->add_option("--config", f.config, "key = value configuration file")
      ->required(config_required);
  sub->add_option("--out", f.out_dir, "output directory (or file for dataset gen)");
  sub->add_option("--seed", f.seed, "master seed");
  sub->add_option("--override", f.overrides, "key=value override (repeatable)");
  sub->allow_extras();
}

// Everything that configures a TrainConfig-based command, in precedence order.
KeyValues collect(const CommonFlags& f, const std::vector<std::string>& extras) {
  KeyValues kvs;
  if (!f.config.empty()) kvs = read_key_values(f.config);
  for (const auto& o : f.overrides) kvs.push_back(split_override(o));
  for (const auto& e : extras) {
    if (e.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + e + "'");
    kvs.push_back(split_override(std::string_view(e).substr(2)));
  }
  if (f.seed) kvs.emplace_back("train.seed", std::to_string(*f.seed));
  if (!f.out_dir.empty()) kvs.emplace_back("output.dir", f.out_dir);
  return kvs;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"lpopt: low-precision Adam / Muon experiments and bound evaluation", "lpopt"};
  app.require_subcommand(1);

  CommonFlags run_f;
  auto* run = app.add_subcommand("run", "train once and write run.csv + summary.txt");
  add_common(run, run_f, true);

  CommonFlags sweep_f;
  std::string mantissas;
  std::string components;
  std::optional<std::size_t> jobs;
  auto* sw = app.add_subcommand("sweep", "one run per mantissa length");
  add_common(sw, sweep_f, true);
  sw->add_option("--mantissas", mantissas, "comma-separated mantissa lengths");
  sw->add_option("--components", components, "quantized components, e.g. W,G,M,V");
  sw->add_option("--jobs", jobs, "concurrent runs");

  std::string params;
  bool grid = false;
  std::vector<std::string> bound_overrides;
  auto* bounds = app.add_subcommand("bounds", "evaluate a convergence bound");
  bounds->add_option("params", params, "bound parameter file")->required();
  bounds->add_flag("--grid", grid, "print the step-size schedule grid");
  bounds->add_option("--override", bound_overrides, "key=value override (repeatable)");

  std::uint64_t lemma_seed = 0;
  std::uint64_t trials = 10000;
  auto* lemmas = app.add_subcommand("lemmas", "randomized lemma certification");
  lemmas->add_option("--seed", lemma_seed, "seed");
  lemmas->add_option("--trials", trials, "trials per lemma")->check(CLI::PositiveNumber);

  CommonFlags ds_f;
  auto* dataset = app.add_subcommand("dataset", "synthetic dataset utilities");
  dataset->require_subcommand(1);
  auto* gen = dataset->add_subcommand("gen", "write the synthetic classification dataset");
  add_common(gen, ds_f, false);

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(build_config(collect(run_f, run->remaining())), out);
    if (*sw) {
      KeyValues kvs = collect(sweep_f, sw->remaining());
      if (sw->count("--mantissas")) kvs.emplace_back("sweep.mantissas", mantissas);
      if (sw->count("--components")) kvs.emplace_back("sweep.components", components);
      if (jobs) kvs.emplace_back("sweep.jobs", std::to_string(*jobs));
      return cmd_sweep(build_config(kvs), out);
    }
    if (*bounds) {
      KeyValues kvs = read_key_values(params);
      for (const auto& o : bound_overrides) kvs.push_back(split_override(o));
      return cmd_bounds(build_bounds_params(kvs), grid, out, err);
    }
    if (*lemmas) return cmd_lemmas(lemma_seed, trials, out);
    if (*gen) {
      KeyValues kvs = collect(ds_f, gen->remaining());
      if (ds_f.out_dir.empty()) throw ConfigError("dataset gen needs --out FILE");
      kvs.pop_back();  // --out names a file here, not output.dir
      return cmd_dataset_gen(build_config(kvs), ds_f.out_dir, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const PreconditionViolated& e) {
    err << e.what() << '\n';
    return kExitPrecondition;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace lpopt::cli
