// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace lpopt::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError("bad value for " + key + ": '" + std::string(v) + "'");
  }
  return out;
}

double parse_real(const std::string& key, std::string_view v) { return parse_number<double>(key, v); }
std::uint64_t parse_u64(const std::string& key, std::string_view v) {
  return parse_number<std::uint64_t>(key, v);
}

bool parse_bool(const std::string& key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("bad boolean for " + key + ": '" + std::string(v) + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, std::string_view v) {
  std::vector<T> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    const auto item = trim(v.substr(0, comma));
    if (item.empty()) throw ConfigError("empty list element in " + key);
    out.push_back(parse_number<T>(key, item));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

template <typename E>
E parse_enum(const std::string& key, std::string_view v,
             std::optional<E> (*parse)(std::string_view) noexcept) {
  if (auto e = parse(v)) return *e;
  throw ConfigError("bad value for " + key + ": '" + std::string(v) + "'");
}

std::optional<OrthoMethod> parse_ortho(std::string_view s) noexcept {
  if (s == "svd") return OrthoMethod::ExactSvd;
  if (s == "ns") return OrthoMethod::NewtonSchulz;
  return std::nullopt;
}
std::string_view ortho_name(OrthoMethod m) { return m == OrthoMethod::ExactSvd ? "svd" : "ns"; }

std::optional<OutputFormat> parse_format(std::string_view s) noexcept {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "jsonl") return OutputFormat::Jsonl;
  return std::nullopt;
}

std::string real(double v) { return format_double(v); }

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

std::string components_name(const ComponentMask& c) {
  std::string out;
  auto add = [&](bool on, const char* s) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += s;
  };
  add(c.weights, "W");
  add(c.gradients, "G");
  add(c.moment1, "M");
  add(c.moment2, "V");
  return out;
}

ComponentMask parse_components(const std::string& key, std::string_view v) {
  ComponentMask c{false, false, false, false};
  while (!v.empty()) {
    const auto comma = v.find(',');
    const auto item = trim(v.substr(0, comma));
    if (item == "W") c.weights = true;
    else if (item == "G") c.gradients = true;
    else if (item == "M") c.moment1 = true;
    else if (item == "V") c.moment2 = true;
    else throw ConfigError("bad component in " + key + ": '" + std::string(item) + "'");
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return c;
}

struct Key {
  std::function<void(CliConfig&, const std::string& key, const std::string& v)> set;
  std::function<std::string(const CliConfig&)> get;  // empty for write-only aliases
};

using Table = std::map<std::string, Key>;

void add_policy_keys(Table& t, const std::string& name, QuantSpec QuantPolicy::*member) {
  const std::string p = "policy." + name + ".";
  t[p + "mantissa"] = {
      [member](CliConfig& c, const std::string& k, const std::string& v) {
        const auto m = parse_number<int>(k, v);
        QuantSpec& s = c.train.policy.*member;
        s.mantissa_bits = m;
        s.enabled = true;
      },
      [member](const CliConfig& c) { return std::to_string((c.train.policy.*member).mantissa_bits); }};
  t[p + "rounding"] = {
      [member](CliConfig& c, const std::string& k, const std::string& v) {
        (c.train.policy.*member).rounding = parse_enum<Rounding>(k, v, parse_rounding);
      },
      [member](const CliConfig& c) { return std::string(to_string((c.train.policy.*member).rounding)); }};
  t[p + "enabled"] = {
      [member](CliConfig& c, const std::string& k, const std::string& v) {
        (c.train.policy.*member).enabled = parse_bool(k, v);
      },
      [member](const CliConfig& c) { return std::string((c.train.policy.*member).enabled ? "true" : "false"); }};
  t[p + "q_override"] = {
      [member](CliConfig& c, const std::string& k, const std::string& v) {
        auto& s = c.train.policy.*member;
        if (v == "none") s.q_override.reset();
        else s.q_override = parse_real(k, v);
      },
      [member](const CliConfig& c) {
        const auto& s = c.train.policy.*member;
        return s.q_override ? real(*s.q_override) : std::string("none");
      }};
}

const Table& table() {
  static const Table t = [] {
    Table t;
#define LPOPT_REAL(KEY, FIELD)                                                                  \
  t[KEY] = {[](CliConfig& c, const std::string& k, const std::string& v) { c.FIELD = parse_real(k, v); }, \
            [](const CliConfig& c) { return real(c.FIELD); }}
#define LPOPT_UINT(KEY, FIELD)                                                                 \
  t[KEY] = {[](CliConfig& c, const std::string& k, const std::string& v) {                      \
              c.FIELD = static_cast<decltype(c.FIELD)>(parse_u64(k, v));                        \
            },                                                                                  \
            [](const CliConfig& c) { return std::to_string(c.FIELD); }}
#define LPOPT_BOOL(KEY, FIELD)                                                                 \
  t[KEY] = {[](CliConfig& c, const std::string& k, const std::string& v) { c.FIELD = parse_bool(k, v); }, \
            [](const CliConfig& c) { return std::string(c.FIELD ? "true" : "false"); }}
#define LPOPT_ENUM(KEY, FIELD, TYPE, PARSE, NAME)                                              \
  t[KEY] = {[](CliConfig& c, const std::string& k, const std::string& v) {                      \
              c.FIELD = parse_enum<TYPE>(k, v, PARSE);                                          \
            },                                                                                  \
            [](const CliConfig& c) { return std::string(NAME(c.FIELD)); }}

    LPOPT_ENUM("problem.kind", train.problem.kind, ProblemKind, parse_problem_kind, to_string);
    LPOPT_UINT("problem.m", train.problem.m);
    LPOPT_UINT("problem.n", train.problem.n);
    LPOPT_REAL("problem.noise_sigma", train.problem.noise_sigma);
    LPOPT_REAL("problem.init_mean", train.problem.init_mean);
    LPOPT_REAL("problem.init_std", train.problem.init_std);
    t["problem.mlp_layers"] = {
        [](CliConfig& c, const std::string& k, const std::string& v) {
          c.train.problem.mlp_layers = parse_list<std::size_t>(k, v);
        },
        [](const CliConfig& c) { return join(c.train.problem.mlp_layers); }};
    LPOPT_UINT("problem.dataset_seed", train.problem.dataset_seed);
    LPOPT_UINT("problem.dataset_size", train.problem.dataset_size);
    LPOPT_UINT("problem.num_classes", train.problem.num_classes);
    LPOPT_REAL("problem.class_sep", train.problem.class_sep);
    LPOPT_REAL("problem.quad_hmin", train.problem.quad_hmin);
    LPOPT_REAL("problem.quad_hmax", train.problem.quad_hmax);
    LPOPT_UINT("problem.batch", train.problem.batch);
    LPOPT_REAL("problem.grad_clip", train.problem.grad_clip);

    LPOPT_ENUM("optimizer.kind", train.optimizer, OptimizerKind, parse_optimizer, to_string);
    LPOPT_REAL("adam.eta", train.adam.eta);
    LPOPT_REAL("adam.beta1", train.adam.beta1);
    LPOPT_REAL("adam.beta2", train.adam.beta2);
    LPOPT_REAL("adam.epsilon", train.adam.epsilon);
    LPOPT_ENUM("adam.schedule", train.adam.schedule, StepSchedule, parse_schedule, to_string);
    LPOPT_ENUM("adam.variant", train.adam.variant, MomentVariant, parse_variant, to_string);
    LPOPT_REAL("muon.eta", train.muon.eta);
    LPOPT_REAL("muon.beta", train.muon.beta);
    LPOPT_ENUM("muon.ortho", train.muon.ortho.method, OrthoMethod, parse_ortho, ortho_name);
    t["muon.ns_iters"] = {
        [](CliConfig& c, const std::string& k, const std::string& v) {
          c.train.muon.ortho.ns_iters = parse_number<int>(k, v);
        },
        [](const CliConfig& c) { return std::to_string(c.train.muon.ortho.ns_iters); }};

    add_policy_keys(t, "weights", &QuantPolicy::weights);
    add_policy_keys(t, "gradients", &QuantPolicy::gradients);
    add_policy_keys(t, "moment1", &QuantPolicy::moment1);
    add_policy_keys(t, "moment2", &QuantPolicy::moment2);
    for (const char* field : {"mantissa", "rounding", "enabled", "q_override"}) {
      const std::string suffix = std::string(".") + field;
      t["policy.all" + suffix] = {
          [suffix](CliConfig& c, const std::string& k, const std::string& v) {
            for (const char* comp : {"weights", "gradients", "moment1", "moment2"}) {
              table().at("policy." + std::string(comp) + suffix).set(c, k, v);
            }
          },
          {}};
    }

    LPOPT_UINT("train.T", train.T);
    LPOPT_UINT("train.B", train.B);
    LPOPT_UINT("train.seed", train.seed);
    LPOPT_UINT("train.telemetry_every", train.telemetry_every);
    LPOPT_UINT("train.tail_window", train.tail_window);
    LPOPT_BOOL("train.parallel_workers", train.parallel_workers);
    LPOPT_BOOL("train.timing", train.timing);

    t["output.dir"] = {[](CliConfig& c, const std::string&, const std::string& v) { c.output_dir = v; },
                       [](const CliConfig& c) { return c.output_dir.string(); }};
    LPOPT_ENUM("output.format", format, OutputFormat, parse_format,
               [](OutputFormat f) { return f == OutputFormat::Csv ? "csv" : "jsonl"; });

    t["sweep.mantissas"] = {
        [](CliConfig& c, const std::string& k, const std::string& v) {
          c.mantissas = parse_list<int>(k, v);
        },
        [](const CliConfig& c) { return join(c.mantissas); }};
    t["sweep.components"] = {
        [](CliConfig& c, const std::string& k, const std::string& v) {
          c.components = parse_components(k, v);
        },
        [](const CliConfig& c) { return components_name(c.components); }};
    LPOPT_UINT("sweep.jobs", jobs);
#undef LPOPT_REAL
#undef LPOPT_UINT
#undef LPOPT_BOOL
#undef LPOPT_ENUM
    return t;
  }();
  return t;
}

}  // namespace

KeyValues parse_key_values(std::string_view text, std::string_view origin) {
  KeyValues out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": empty key");
    }
    out.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path.string());
}

std::pair<std::string, std::string> split_override(std::string_view kv) {
  const auto eq = kv.find('=');
  if (eq == std::string_view::npos || trim(kv.substr(0, eq)).empty()) {
    throw ConfigError("override must be key=value: '" + std::string(kv) + "'");
  }
  return {std::string(trim(kv.substr(0, eq))), std::string(trim(kv.substr(eq + 1)))};
}

void apply(CliConfig& cfg, const std::string& key, const std::string& value) {
  const auto& t = table();
  const auto it = t.find(key);
  if (it == t.end()) throw ConfigError("unknown config key '" + key + "'");
  try {
    it->second.set(cfg, key, value);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("bad value for " + key + ": " + e.what());
  }
}

CliConfig build_config(const KeyValues& kvs) {
  CliConfig cfg;
  for (const auto& [k, v] : kvs) apply(cfg, k, v);
  try {
    validate(cfg.train);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (cfg.jobs < 1) throw ConfigError("sweep.jobs must be >= 1");
  return cfg;
}

std::vector<std::string> known_keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : table()) out.push_back(k);
  return out;
}

std::string echo(const CliConfig& cfg) {
  std::string out;
  for (const auto& [k, key] : table()) {
    if (!key.get) continue;
    out += k + " = " + key.get(cfg) + "\n";
  }
  return out;
}

BoundsParams build_bounds_params(const KeyValues& kvs) {
  BoundsParams p;
  std::map<std::string, double*> adam{
      {"T", &p.adam.T},         {"d", &p.adam.d},         {"eta", &p.adam.eta},
      {"beta1", &p.adam.beta1}, {"beta2", &p.adam.beta2}, {"epsilon", &p.adam.epsilon},
      {"q_G", &p.adam.q_G},     {"q_M", &p.adam.q_M},     {"q_V", &p.adam.q_V},
      {"q_W", &p.adam.q_W},     {"R", &p.adam.R},         {"L", &p.adam.L},
      {"D", &p.adam.D},         {"F0_minus_Fstar", &p.adam.F0_minus_Fstar}};
  std::map<std::string, double*> muon{
      {"T", &p.muon.T},         {"eta", &p.muon.eta}, {"beta", &p.muon.beta},
      {"r", &p.muon.r},         {"B", &p.muon.B},     {"sigma", &p.muon.sigma},
      {"L", &p.muon.L},         {"Delta", &p.muon.Delta}, {"q_G", &p.muon.q_G},
      {"q_W", &p.muon.q_W},     {"q_M", &p.muon.q_M}, {"C2", &p.muon.C2}};
  // The theorem selector may appear anywhere in the file.
  for (const auto& [k, v] : kvs) {
    if (k == "theorem") p.theorem = parse_enum<OptimizerKind>(k, v, parse_optimizer);
  }
  auto& fields = p.theorem == OptimizerKind::QAdam ? adam : muon;
  for (const auto& [k, v] : kvs) {
    if (k == "theorem") continue;
    if (k == "grid.T") {
      p.grid_T = parse_list<double>(k, v);
    } else if (k == "grid.q_scale") {
      p.grid_q_scale = parse_real(k, v);
    } else if (k == "grid.q_power") {
      p.grid_q_power = parse_real(k, v);
    } else if (auto it = fields.find(k); it != fields.end()) {
      *it->second = parse_real(k, v);
    } else {
      throw ConfigError("unknown bounds key '" + k + "' for theorem " +
                        std::string(to_string(p.theorem)));
    }
  }
  return p;
}

}  // namespace lpopt::cli
