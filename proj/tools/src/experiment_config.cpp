#include "experiment_config.hpp"

#include <fstream>
#include <set>

namespace upcc::cli {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

std::string loss_name(GanLossKind k) { return k == GanLossKind::LeastSquares ? "lsgan" : "log"; }

GanLossKind loss_from_name(const std::string& s) {
  if (s == "lsgan") return GanLossKind::LeastSquares;
  if (s == "log") return GanLossKind::Log;
  throw ConfigError("gan.loss: expected 'lsgan' or 'log', got '" + s + "'");
}

void derive_seeds(ExperimentConfig& c) {
  c.dataset.seed = c.seed;
  c.ae_train.seed = c.seed + 1;
  c.gan_train.seed = c.seed + 2;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"desk-scale", "toy-chairs", "paper-scale"};
  return names;
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  if (name == "desk-scale") {
    c.dataset.families = {ShapeFamily::Chair5};
    c.dataset.n = 128;
    c.dataset.shapes_per_family = 200;
    c.ae = AutoencoderSpec::desk_scale(128, 16);
    c.ae_train = AeTrainConfig::desk();
    c.gan_train = GanTrainConfig::desk();
  } else if (name == "toy-chairs") {
    c.dataset.families = {ShapeFamily::Chair5};
    c.dataset.n = 128;
    c.dataset.shapes_per_family = 100;
    c.ae = AutoencoderSpec::desk_scale(128, 16);
    c.ae_train = AeTrainConfig::desk();
    c.ae_train.adam.lr = 0.001;
    c.ae_train.lr_decay = 1.0;
    c.ae_train.epochs = 100;
    c.gan_train = GanTrainConfig::desk();
    c.gan_train.epochs = 150;
  } else if (name == "paper-scale") {
    c.dataset.families = all_families();
    c.dataset.n = 2048;
    c.dataset.shapes_per_family = 1000;
    c.dataset.scan_resolution = 128;
    c.ae = AutoencoderSpec::paper_scale();
    c.ae_train = AeTrainConfig::paper();
    c.gan_train = GanTrainConfig::paper();
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  c.gan_train.network.k = c.ae.k;
  derive_seeds(c);
  return c;
}

void override_seed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  derive_seeds(cfg);
}

ExperimentConfig parse_config(const json& doc) {
  check_keys(doc, "config", {"schema_version", "preset", "seed", "dataset", "ae", "gan", "eval", "ablate"});
  int version = 0;
  read(doc, "schema_version", version, "config");
  require(doc.contains("schema_version"), "config: schema_version is required");
  require(version == kSchemaVersion,
          "config: unsupported schema_version " + std::to_string(version) + " (expected " +
              std::to_string(kSchemaVersion) + ")");
  std::string preset = "desk-scale";
  read(doc, "preset", preset, "config");
  ExperimentConfig c = preset_config(preset);
  if (doc.contains("seed")) {
    read(doc, "seed", c.seed, "config");
    derive_seeds(c);
  }

  if (doc.contains("dataset")) {
    const json& d = doc["dataset"];
    check_keys(d, "dataset", {"families", "n", "shapes_per_family", "test_fraction", "sigma", "r_train",
                              "r_test", "sweep_r", "scan_resolution", "seed"});
    if (d.contains("families")) {
      std::vector<std::string> names;
      read(d, "families", names, "dataset");
      require(!names.empty(), "dataset.families: must not be empty");
      c.dataset.families.clear();
      for (const auto& n : names) {
        try {
          c.dataset.families.push_back(family_from_string(n));
        } catch (const InvalidArgument& e) {
          throw ConfigError(std::string("dataset.families: ") + e.what());
        }
      }
    }
    read(d, "n", c.dataset.n, "dataset");
    read(d, "shapes_per_family", c.dataset.shapes_per_family, "dataset");
    read(d, "test_fraction", c.dataset.test_fraction, "dataset");
    read(d, "sigma", c.dataset.sigma, "dataset");
    if (d.contains("r_train")) {
      std::vector<double> r;
      read(d, "r_train", r, "dataset");
      require(r.size() == 2, "dataset.r_train: expected [min, max]");
      c.dataset.r_train_min = r[0];
      c.dataset.r_train_max = r[1];
    }
    read(d, "r_test", c.dataset.r_test, "dataset");
    read(d, "sweep_r", c.dataset.sweep_r, "dataset");
    read(d, "scan_resolution", c.dataset.scan_resolution, "dataset");
    read(d, "seed", c.dataset.seed, "dataset");
  }

  if (doc.contains("ae")) {
    const json& a = doc["ae"];
    check_keys(a, "ae", {"k", "encoder_widths", "decoder_widths", "lr", "lr_decay", "beta1", "beta2",
                         "batch_size", "epochs", "seed"});
    read(a, "k", c.ae.k, "ae");
    read(a, "encoder_widths", c.ae.encoder_widths, "ae");
    read(a, "decoder_widths", c.ae.decoder_widths, "ae");
    read(a, "lr", c.ae_train.adam.lr, "ae");
    read(a, "lr_decay", c.ae_train.lr_decay, "ae");
    read(a, "beta1", c.ae_train.adam.beta1, "ae");
    read(a, "beta2", c.ae_train.adam.beta2, "ae");
    read(a, "batch_size", c.ae_train.batch_size, "ae");
    read(a, "epochs", c.ae_train.epochs, "ae");
    read(a, "seed", c.ae_train.seed, "ae");
  }
  c.ae.n = c.dataset.n;
  c.gan_train.network.k = c.ae.k;

  if (doc.contains("gan")) {
    const json& g = doc["gan"];
    check_keys(g, "gan", {"mode", "generator_hidden", "discriminator_hidden", "alpha", "beta", "tau", "loss",
                          "lr", "beta1", "beta2", "batch_size", "epochs", "discriminator_steps", "seed"});
    if (g.contains("mode")) {
      std::string m;
      read(g, "mode", m, "gan");
      try {
        c.mode = training_mode_from_string(m);
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("gan.mode: ") + e.what());
      }
    }
    read(g, "generator_hidden", c.gan_train.network.generator_hidden, "gan");
    read(g, "discriminator_hidden", c.gan_train.network.discriminator_hidden, "gan");
    if (g.contains("alpha") && !g["alpha"].is_null()) {
      double v = 0;
      read(g, "alpha", v, "gan");
      c.gan_train.alpha = v;
    }
    if (g.contains("beta") && !g["beta"].is_null()) {
      double v = 0;
      read(g, "beta", v, "gan");
      c.gan_train.beta = v;
    }
    read(g, "tau", c.gan_train.tau, "gan");
    if (g.contains("loss")) {
      std::string l;
      read(g, "loss", l, "gan");
      c.gan_train.loss_kind = loss_from_name(l);
    }
    read(g, "lr", c.gan_train.adam.lr, "gan");
    read(g, "beta1", c.gan_train.adam.beta1, "gan");
    read(g, "beta2", c.gan_train.adam.beta2, "gan");
    read(g, "batch_size", c.gan_train.batch_size, "gan");
    read(g, "epochs", c.gan_train.epochs, "gan");
    read(g, "discriminator_steps", c.gan_train.discriminator_steps, "gan");
    read(g, "seed", c.gan_train.seed, "gan");
  }

  if (doc.contains("eval")) {
    const json& e = doc["eval"];
    check_keys(e, "eval", {"eps", "jsd_grid"});
    read(e, "eps", c.eval.eps, "eval");
    read(e, "jsd_grid", c.eval.jsd_grid, "eval");
  }

  if (doc.contains("ablate")) {
    const json& a = doc["ablate"];
    check_keys(a, "ablate", {"modes"});
    if (a.contains("modes")) {
      std::vector<std::string> names;
      read(a, "modes", names, "ablate");
      c.ablate_modes.clear();
      for (const auto& n : names) {
        try {
          c.ablate_modes.push_back(training_mode_from_string(n));
        } catch (const InvalidArgument& e) {
          throw ConfigError(std::string("ablate.modes: ") + e.what());
        }
      }
    }
  }

  require(c.dataset.n >= 8, "dataset.n: must be at least 8");
  require(c.dataset.shapes_per_family >= 2, "dataset.shapes_per_family: must be at least 2");
  require(c.dataset.test_fraction > 0.0 && c.dataset.test_fraction < 1.0, "dataset.test_fraction: must lie in (0, 1)");
  require(c.dataset.sigma >= 0.0, "dataset.sigma: must be non-negative");
  require(c.dataset.r_train_min >= 0.0 && c.dataset.r_train_min <= c.dataset.r_train_max &&
              c.dataset.r_train_max < 1.0,
          "dataset.r_train: need 0 <= min <= max < 1");
  require(c.dataset.r_test >= 0.0 && c.dataset.r_test < 1.0, "dataset.r_test: must lie in [0, 1)");
  for (double r : c.dataset.sweep_r) require(r >= 0.0 && r < 1.0, "dataset.sweep_r: values must lie in [0, 1)");
  require(c.dataset.scan_resolution >= 4, "dataset.scan_resolution: must be at least 4");
  require(c.ae_train.batch_size > 0 && c.gan_train.batch_size > 0, "batch_size: must be positive");
  require(c.ae_train.adam.lr > 0.0 && c.gan_train.adam.lr > 0.0, "lr: must be positive");
  require(c.ae_train.lr_decay > 0.0 && c.ae_train.lr_decay <= 1.0, "ae.lr_decay: must lie in (0, 1]");
  require(c.eval.eps > 0.0, "eval.eps: must be positive");
  require(c.eval.jsd_grid > 0, "eval.jsd_grid: must be positive");
  require(!c.ablate_modes.empty(), "ablate.modes: must not be empty");
  try {
    c.ae.validate();
    c.gan_train.network.validate();
    LossWeights w = settings_for(c.mode, c.gan_train.tau).weights;
    if (c.gan_train.alpha) w.alpha = *c.gan_train.alpha;
    if (c.gan_train.beta) w.beta = *c.gan_train.beta;
    w.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  std::vector<std::string> families, modes;
  for (auto f : c.dataset.families) families.push_back(to_string(f));
  for (auto m : c.ablate_modes) modes.push_back(to_string(m));
  json j;
  j["schema_version"] = kSchemaVersion;
  j["preset"] = c.preset;
  j["seed"] = c.seed;
  j["dataset"] = {{"families", families},
                  {"n", c.dataset.n},
                  {"shapes_per_family", c.dataset.shapes_per_family},
                  {"test_fraction", c.dataset.test_fraction},
                  {"sigma", c.dataset.sigma},
                  {"r_train", {c.dataset.r_train_min, c.dataset.r_train_max}},
                  {"r_test", c.dataset.r_test},
                  {"sweep_r", c.dataset.sweep_r},
                  {"scan_resolution", c.dataset.scan_resolution},
                  {"seed", c.dataset.seed}};
  j["ae"] = {{"k", c.ae.k},
             {"encoder_widths", c.ae.encoder_widths},
             {"decoder_widths", c.ae.decoder_widths},
             {"lr", c.ae_train.adam.lr},
             {"lr_decay", c.ae_train.lr_decay},
             {"beta1", c.ae_train.adam.beta1},
             {"beta2", c.ae_train.adam.beta2},
             {"batch_size", c.ae_train.batch_size},
             {"epochs", c.ae_train.epochs},
             {"seed", c.ae_train.seed}};
  j["gan"] = {{"mode", to_string(c.mode)},
              {"generator_hidden", c.gan_train.network.generator_hidden},
              {"discriminator_hidden", c.gan_train.network.discriminator_hidden},
              {"alpha", c.gan_train.alpha ? json(*c.gan_train.alpha) : json(nullptr)},
              {"beta", c.gan_train.beta ? json(*c.gan_train.beta) : json(nullptr)},
              {"tau", c.gan_train.tau},
              {"loss", loss_name(c.gan_train.loss_kind)},
              {"lr", c.gan_train.adam.lr},
              {"beta1", c.gan_train.adam.beta1},
              {"beta2", c.gan_train.adam.beta2},
              {"batch_size", c.gan_train.batch_size},
              {"epochs", c.gan_train.epochs},
              {"discriminator_steps", c.gan_train.discriminator_steps},
              {"seed", c.gan_train.seed}};
  j["eval"] = {{"eps", c.eval.eps}, {"jsd_grid", c.eval.jsd_grid}};
  j["ablate"] = {{"modes", modes}};
  return j;
}

}  // namespace upcc::cli
