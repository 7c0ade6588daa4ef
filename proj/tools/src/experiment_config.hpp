#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "upcc/autoencoder.hpp"
#include "upcc/error.hpp"
#include "upcc/latent_gan.hpp"
#include "upcc/scan_synth.hpp"

namespace upcc::cli {

inline constexpr int kSchemaVersion = 1;

struct EvalSettings {
  double eps = 0.03;
  std::size_t jsd_grid = 32;
};

/// Everything a run depends on. Section seeds are derived from `seed`
/// (dataset = seed, ae = seed + 1, gan = seed + 2) unless given explicitly.
struct ExperimentConfig {
  std::string preset = "desk-scale";
  std::uint64_t seed = 42;
  DatasetConfig dataset;
  AutoencoderSpec ae;
  AeTrainConfig ae_train;
  GanTrainConfig gan_train;
  TrainingMode mode = TrainingMode::Default;
  EvalSettings eval;
  std::vector<TrainingMode> ablate_modes = all_training_modes();
};

const std::vector<std::string>& preset_names();
ExperimentConfig preset_config(const std::string& name);

/// Parses a config document. Keys absent from the document keep the values
/// of its preset ("preset" key, default desk-scale). Unknown keys, a wrong
/// schema_version or out-of-range values throw ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// Fully resolved document: every field and seed spelled out.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Replaces the master seed and re-derives every section seed from it.
void override_seed(ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace upcc::cli
