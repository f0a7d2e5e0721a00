// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>

#include "dmol/cli.hpp"

namespace {

// One instance per subcommand so every command carries the shared flag set.
struct CommonFlags {
  dmol::CliCommon common;
  std::uint64_t seed_value = 0;
  CLI::Option* seed_opt = nullptr;

  void bind(CLI::App* sub) {
    sub->add_option("--config", common.config_path,
                    "Config file (key = value with [sections])");
    sub->add_option("--set", common.overrides,
                    "Override a config key (section.key=value); flags win")
        ->type_name("KEY=VALUE");
    seed_opt = sub->add_option("--seed", seed_value,
                               "Master seed (overrides sampling.seed)");
    sub->add_option("--out", common.out, "Output path");
  }

  dmol::CliCommon resolve() const {
    dmol::CliCommon c = common;
    if (seed_opt != nullptr && seed_opt->count() > 0) c.seed = seed_value;
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dmol: schedule-driven discrete graph diffusion for molecules"};
  app.require_subcommand(1);
  int rc = dmol::kExitOk;

  CommonFlags train_flags;
  bool dry_run = false;
  CLI::App* train =
      app.add_subcommand("train", "Train a denoiser and write a checkpoint");
  train_flags.bind(train);
  train->add_flag("--dry-run", dry_run,
                  "Validate config and dataset, write nothing");
  train->callback([&]() {
    rc = dmol::cmd_train(train_flags.resolve(), dry_run, std::cout, std::cerr);
  });

  CommonFlags sample_flags;
  std::string checkpoint_path;
  CLI::App* sample =
      app.add_subcommand("sample", "Generate molecules from a checkpoint");
  sample_flags.bind(sample);
  sample->add_option("--checkpoint", checkpoint_path, "Checkpoint file")
      ->required();
  sample->callback([&]() {
    rc = dmol::cmd_sample(sample_flags.resolve(), checkpoint_path, std::cout,
                          std::cerr);
  });

  CommonFlags eval_flags;
  std::string eval_input;
  CLI::App* eval = app.add_subcommand(
      "evaluate", "Validity/uniqueness/novelty of a generated file");
  eval_flags.bind(eval);
  eval->add_option("--input", eval_input, "Generated molecules (SMILES/JSON)")
      ->required();
  eval->callback([&]() {
    rc = dmol::cmd_evaluate(eval_flags.resolve(), eval_input, std::cout,
                            std::cerr);
  });

  CommonFlags mine_flags;
  CLI::App* mine = app.add_subcommand(
      "mine-rings", "Mine the top ring classes from the dataset");
  mine_flags.bind(mine);
  mine->callback([&]() {
    rc = dmol::cmd_mine_rings(mine_flags.resolve(), std::cout, std::cerr);
  });

  CommonFlags compress_flags;
  std::string compress_dict;
  std::string compress_input;
  CLI::App* compress =
      app.add_subcommand("compress", "Replace dictionary rings by supernodes");
  compress_flags.bind(compress);
  compress->add_option("--dict", compress_dict, "Ring dictionary JSON")
      ->required();
  compress->add_option("--input", compress_input, "Molecule file")->required();
  compress->callback([&]() {
    rc = dmol::cmd_compress(compress_flags.resolve(), compress_dict,
                            compress_input, std::cout, std::cerr);
  });

  CommonFlags decompress_flags;
  std::string decompress_dict;
  std::string decompress_input;
  CLI::App* decompress =
      app.add_subcommand("decompress", "Expand supernodes back to rings");
  decompress_flags.bind(decompress);
  decompress->add_option("--dict", decompress_dict, "Ring dictionary JSON")
      ->required();
  decompress->add_option("--input", decompress_input,
                         "Compressed graphs (JSON lines)")
      ->required();
  decompress->callback([&]() {
    rc = dmol::cmd_decompress(decompress_flags.resolve(), decompress_dict,
                              decompress_input, std::cout, std::cerr);
  });

  CommonFlags analyze_flags;
  std::string analyze_kind;
  CLI::App* analyze = app.add_subcommand(
      "analyze", "Closed-form and Monte-Carlo process diagnostics");
  analyze_flags.bind(analyze);
  analyze
      ->add_option("kind", analyze_kind,
                   "efficiency | hamming | stationarity | compat")
      ->required()
      ->check(CLI::IsMember(
          {"efficiency", "hamming", "stationarity", "compat"}));
  analyze->callback([&]() {
    rc = dmol::cmd_analyze(analyze_flags.resolve(), analyze_kind, std::cout,
                           std::cerr);
  });

  CommonFlags ablate_flags;
  CLI::App* ablate = app.add_subcommand(
      "ablate", "Train/sample/evaluate across loss and edge-scope flags");
  ablate_flags.bind(ablate);
  ablate->callback([&]() {
    rc = dmol::cmd_ablate(ablate_flags.resolve(), std::cout, std::cerr);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? dmol::kExitOk : dmol::kExitUsage;
  }
  return rc;
}
