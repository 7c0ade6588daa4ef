#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace fs = std::filesystem;
using namespace upcc::cli;

int main(int argc, char** argv) {
  CLI::App app{"upcc: unpaired point-cloud completion experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, preset, run_dir = "run";
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--preset", preset, "start from a named preset instead of a config file")
      ->check(CLI::IsMember(preset_names()));
  app.add_option("--run-dir", run_dir, "directory owning all outputs of this run");
  app.add_option("--seed", seed, "override the master seed (section seeds are re-derived)");
  app.add_flag("-v,--verbose", verbose, "per-epoch progress");

  auto* synth = app.add_subcommand("synth", "generate the procedural dataset");
  bool train_partial = false;
  auto* train_ae = app.add_subcommand("train-ae", "train the clean (and partial) autoencoder");
  train_ae->add_flag("--partial", train_partial, "also train the partial-input autoencoder");
  auto* train_gan = app.add_subcommand("train-gan", "train the latent GAN for the configured mode");
  std::optional<fs::path> input, output, completions, gt, inputs;
  auto* complete = app.add_subcommand("complete", "complete partial clouds");
  complete->add_option("--input", input, "directory of partial PLY files");
  complete->add_option("--output", output, "directory for completed PLY files");
  auto* eval = app.add_subcommand("eval", "metrics of completions against ground truth");
  eval->add_option("--completions", completions, "directory of completed PLY files");
  eval->add_option("--gt", gt, "directory of ground-truth PLY files, paired by name");
  eval->add_option("--inputs", inputs, "directory of the partial inputs, for the hl column");
  auto* sweep = app.add_subcommand("sweep", "F1 and EMD across incompleteness levels");
  auto* ablate = app.add_subcommand("ablate", "train and evaluate every ablation mode");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    Context ctx;
    ctx.run_dir = run_dir;
    ctx.verbose = verbose;
    ctx.log = &std::cerr;
    if (!config_path.empty() && !preset.empty()) throw upcc::ConfigError("give --config or --preset, not both");
    if (!config_path.empty()) {
      ctx.cfg = load_config(config_path);
    } else if (!preset.empty()) {
      ctx.cfg = preset_config(preset);
    } else if (auto stored = stored_config(run_dir)) {
      ctx.cfg = *stored;
    } else {
      throw upcc::ConfigError("no config: pass --config or --preset, or reuse a run directory");
    }
    if (seed) override_seed(ctx.cfg, *seed);

    if (*synth) cmd_synth(ctx);
    if (*train_ae) cmd_train_ae(ctx, train_partial);
    if (*train_gan) cmd_train_gan(ctx);
    if (*complete) cmd_complete(ctx, input, output);
    if (*eval) cmd_eval(ctx, completions, gt, inputs);
    if (*sweep) cmd_sweep(ctx);
    if (*ablate) cmd_ablate(ctx);
  } catch (...) {
    return report_failure(std::cerr);
  }
  return kExitOk;
}
