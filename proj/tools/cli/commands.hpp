// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace lpopt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;
inline constexpr int kExitPrecondition = 4;

/// Entry point behind the `lpopt` binary. All output goes to `out` / `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_run(const CliConfig& cfg, std::ostream& out);
int cmd_sweep(const CliConfig& cfg, std::ostream& out);
int cmd_bounds(const BoundsParams& params, bool grid, std::ostream& out, std::ostream& err);
int cmd_lemmas(std::uint64_t seed, std::uint64_t trials, std::ostream& out);
int cmd_dataset_gen(const CliConfig& cfg, const std::filesystem::path& file, std::ostream& out);

/// Values written to summary.txt, read back for round-trip checks.
struct Summary {
  double tail_grad_norm = 0.0;
  double final_loss = 0.0;
};
[[nodiscard]] Summary read_summary(const std::filesystem::path& file);

}  // namespace lpopt::cli
