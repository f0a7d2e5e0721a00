// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dmol/config.hpp"

namespace dmol {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitDivergence = 3;

// Flags shared by every command. `overrides` holds section.key=value pairs
// applied on top of the config file; the dedicated seed flag wins over both.
// All randomness flows from the resolved seed through fixed per-purpose
// substream labels (cli-init, cli-train, cli-sample, cli-analyze and the
// ablate probe), so every command is reproducible in isolation.
struct CliCommon {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;  // output path; empty = stream output where sensible
};

// Config file + overrides + seed flag folded into one validated RunConfig.
// A missing config path yields the documented defaults.
RunConfig resolve_config(const CliCommon& common);

// Commands return a process exit code (ok/usage/data/divergence) and write
// human-readable progress to `log`, diagnostics to `err`. Artifacts go to
// files under the --out path.
int cmd_train(const CliCommon& common, bool dry_run, std::ostream& log,
              std::ostream& err);
int cmd_sample(const CliCommon& common, const std::string& checkpoint_path,
               std::ostream& log, std::ostream& err);
int cmd_evaluate(const CliCommon& common, const std::string& generated_path,
                 std::ostream& log, std::ostream& err);
int cmd_mine_rings(const CliCommon& common, std::ostream& log,
                   std::ostream& err);
int cmd_compress(const CliCommon& common, const std::string& dict_path,
                 const std::string& input_path, std::ostream& log,
                 std::ostream& err);
int cmd_decompress(const CliCommon& common, const std::string& dict_path,
                   const std::string& input_path, std::ostream& log,
                   std::ostream& err);
// kind is one of: efficiency, hamming, stationarity, compat. Writes a CSV to
// --out and a JSON summary to --out + ".json".
int cmd_analyze(const CliCommon& common, const std::string& kind,
                std::ostream& log, std::ostream& err);
// Trains, samples and evaluates under {count penalty on/off} x {induced /
// whole-graph edge pool} and writes one CSV row per combination.
int cmd_ablate(const CliCommon& common, std::ostream& log, std::ostream& err);

}  // namespace dmol
