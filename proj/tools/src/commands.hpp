#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "experiment_config.hpp"

namespace upcc::cli {

/// A checkpoint, dataset or other prerequisite of a command is absent.
class MissingArtifact : public Error {
 public:
  using Error::Error;
};

/// Another process holds the run directory.
class RunDirLocked : public Error {
 public:
  using Error::Error;
};

/// Process exit codes, one per failure class.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitMissingArtifact = 3,
  kExitMalformedPly = 4,
  kExitCheckpoint = 5,
  kExitLocked = 6,
  kExitNumeric = 7,
  kExitInvalidArgument = 8,
  kExitUsage = 64,
};

/// Maps the active exception to its exit code and prints a named diagnostic.
int report_failure(std::ostream& err);

/// Exclusive ownership of a run directory for the lifetime of the object.
/// The resolved config is written on entry; a directory created with a
/// different config is refused.
class RunDir {
 public:
  RunDir(std::filesystem::path root, const ExperimentConfig& cfg);
  ~RunDir();
  RunDir(const RunDir&) = delete;
  RunDir& operator=(const RunDir&) = delete;

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path dataset_dir() const { return root_ / "dataset"; }
  std::filesystem::path ae_checkpoint(bool partial) const;
  std::filesystem::path gan_checkpoint(TrainingMode mode) const;

 private:
  std::filesystem::path root_;
  std::filesystem::path lock_;
};

/// Reads the resolved config a run directory was created with, if any.
std::optional<ExperimentConfig> stored_config(const std::filesystem::path& run_dir);

struct Context {
  ExperimentConfig cfg;
  std::filesystem::path run_dir;
  bool verbose = false;
  std::ostream* log = nullptr;  // progress lines; null for silence
};

void cmd_synth(const Context& ctx);
/// Trains the clean autoencoder, and the partial one when the configured
/// mode needs it (or `partial` is set).
void cmd_train_ae(const Context& ctx, bool partial = false);
void cmd_train_gan(const Context& ctx);
/// Completes every PLY in `input_dir` (default: the dataset's test partials)
/// into `output_dir` (default: <run>/completions/<mode>).
void cmd_complete(const Context& ctx, const std::optional<std::filesystem::path>& input_dir = {},
                  const std::optional<std::filesystem::path>& output_dir = {});
/// Metrics of completions against ground truth, paired by file name.
/// Defaults: the run's completions, the dataset's clean test clouds and,
/// for the hl column, the dataset's test partials.
void cmd_eval(const Context& ctx, const std::optional<std::filesystem::path>& completions_dir = {},
              const std::optional<std::filesystem::path>& gt_dir = {},
              const std::optional<std::filesystem::path>& inputs_dir = {});
void cmd_sweep(const Context& ctx);
void cmd_ablate(const Context& ctx);

}  // namespace upcc::cli
