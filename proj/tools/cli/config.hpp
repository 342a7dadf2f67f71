// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

// Flat `section.key = value` configuration files for the lpopt tool.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lpopt/errors.hpp"
#include "lpopt/theory.hpp"
#include "lpopt/trainloop.hpp"

namespace lpopt::cli {

/// Malformed file, unknown key or unparsable value. Maps to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class OutputFormat { Csv, Jsonl };

struct CliConfig {
  TrainConfig train;
  std::filesystem::path output_dir = "out";
  OutputFormat format = OutputFormat::Csv;
  std::vector<int> mantissas{4, 8, 16, 24, 32, 52};
  ComponentMask components;
  std::size_t jobs = 1;
};

/// Ordered key -> raw value pairs, later entries overriding earlier ones.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses `key = value` lines; '#' starts a comment. Throws ConfigError.
[[nodiscard]] KeyValues parse_key_values(std::string_view text, std::string_view origin);
[[nodiscard]] KeyValues read_key_values(const std::filesystem::path& path);

/// Splits "key=value"; throws ConfigError without '='.
[[nodiscard]] std::pair<std::string, std::string> split_override(std::string_view kv);

/// Applies one key. Unknown keys and bad values throw ConfigError.
void apply(CliConfig& cfg, const std::string& key, const std::string& value);
[[nodiscard]] CliConfig build_config(const KeyValues& kvs);

/// Every accepted key, sorted.
[[nodiscard]] std::vector<std::string> known_keys();

/// Canonical dump of the effective configuration, one `key = value` per line.
[[nodiscard]] std::string echo(const CliConfig& cfg);

// Theorem parameter files: `theorem = adam|muon` plus the bound inputs.
struct BoundsParams {
  OptimizerKind theorem = OptimizerKind::QAdam;
  AdamBoundInput adam;
  MuonBoundInput muon;
  std::vector<double> grid_T{1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8};
  double grid_q_scale = 1.0;
  double grid_q_power = 0.5;
};

[[nodiscard]] BoundsParams build_bounds_params(const KeyValues& kvs);

}  // namespace lpopt::cli
