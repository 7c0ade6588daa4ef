#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <unistd.h>

#include "upcc/eval.hpp"
#include "upcc/hash.hpp"
#include "upcc/point_io.hpp"

namespace upcc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void log_line(const Context& ctx, const std::string& line) {
  if (ctx.log) *ctx.log << line << std::endl;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

/// Digest of the parts of the config a trained GAN depends on.
std::string training_digest(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j["gan"].erase("mode");
  j.erase("ablate");
  j.erase("eval");
  return to_hex(fnv1a64(j.dump()));
}

Dataset require_dataset(const RunDir& rd) {
  if (!fs::exists(rd.dataset_dir() / "manifest.json")) {
    throw MissingArtifact("dataset not found in " + rd.dataset_dir().string() + " (run synth first)");
  }
  return load_dataset(rd.dataset_dir());
}

Autoencoder require_ae(const RunDir& rd, bool partial) {
  const fs::path p = rd.ae_checkpoint(partial);
  if (!fs::exists(p)) {
    throw MissingArtifact("missing checkpoint " + p.string() + " (run train-ae" +
                          std::string(partial ? " with a partial_ae mode" : "") + " first)");
  }
  return autoencoder_from_checkpoint(nn::load_checkpoint(p));
}

std::vector<std::pair<std::string, PointSet>> read_dir(const fs::path& dir, const std::string& what) {
  if (!fs::is_directory(dir)) throw MissingArtifact(what + " directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".ply" || ext == ".xyz")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw MissingArtifact("no point files in " + dir.string());
  std::vector<std::pair<std::string, PointSet>> out;
  for (const auto& f : files) out.emplace_back(f.filename().string(), read_points(f));
  return out;
}

void write_ae_curve(const fs::path& path, const std::vector<double>& curve) {
  auto out = open_out(path);
  out << "epoch,loss\n";
  for (std::size_t e = 0; e < curve.size(); ++e) out << e + 1 << ',' << format_number(curve[e]) << "\n";
}

void write_gan_curve(const fs::path& path, const std::vector<GanEpochStats>& curve) {
  auto out = open_out(path);
  out << "epoch,L_F,L_G,hard_HL,adv_term\n";
  for (const auto& s : curve) {
    out << s.epoch << ',' << format_number(s.loss_f) << ',' << format_number(s.loss_g) << ','
        << format_number(s.hard_hl) << ',' << format_number(s.adv_term) << "\n";
  }
}

void train_ae_into(const Context& ctx, const RunDir& rd, const std::vector<PointSet>& clouds, bool partial) {
  const std::string name = partial ? "partial" : "clean";
  log_line(ctx, "training " + name + " autoencoder on " + std::to_string(clouds.size()) + " clouds");
  auto trained = train_ae(clouds, ctx.cfg.ae, ctx.cfg.ae_train, [&](std::size_t e, double loss) {
    if (ctx.verbose) log_line(ctx, "  " + name + " ae epoch " + std::to_string(e) + " loss " + format_number(loss));
  });
  auto ckpt = to_checkpoint(trained, ctx.cfg.ae_train.seed);
  ckpt.meta["trained_on"] = partial ? "partial_train" : "clean_train";
  nn::save_checkpoint(rd.ae_checkpoint(partial), ckpt);
  write_ae_curve(rd.root() / "ae" / (name + "_loss.csv"), trained.loss_curve);
  log_line(ctx, name + " autoencoder final loss " + format_number(trained.loss_curve.back()));
}

bool needs_partial_ae(TrainingMode m) { return settings_for(m).use_partial_ae; }

void train_mode(const Context& ctx, const RunDir& rd, const Dataset& ds, TrainingMode mode) {
  Autoencoder clean = require_ae(rd, false);
  std::optional<Autoencoder> partial;
  if (needs_partial_ae(mode)) partial = require_ae(rd, true);
  const auto clean_train = ds.clouds(ds.clean_train);
  const auto partial_train = ds.clouds(ds.partial_train);
  GanTrainingData data{clean_train, partial_train, ds.partial_train_gt};
  GanTrainConfig tc = ctx.cfg.gan_train;
  log_line(ctx, "training latent GAN, mode " + to_string(mode));
  TrainedGan gan = train_gan(data, clean, partial ? *partial : clean, mode, tc, [&](const GanEpochStats& s) {
    if (ctx.verbose) {
      log_line(ctx, "  gan epoch " + std::to_string(s.epoch) + " L_F " + format_number(s.loss_f) + " L_G " +
                        format_number(s.loss_g) + " hard_HL " + format_number(s.hard_hl));
    }
  });
  auto ckpt = to_checkpoint(gan, tc.seed);
  ckpt.meta["clean_ae_digest"] = file_digest(rd.ae_checkpoint(false));
  if (partial) ckpt.meta["partial_ae_digest"] = file_digest(rd.ae_checkpoint(true));
  ckpt.meta["config_digest"] = training_digest(ctx.cfg);
  nn::save_checkpoint(rd.gan_checkpoint(mode), ckpt);
  write_gan_curve(rd.root() / "gan" / (to_string(mode) + "_loss.csv"), gan.curve);
  if (gan.diverged) throw NumericError(gan.diagnostic + "; last finite state saved to " + rd.gan_checkpoint(mode).string());
  log_line(ctx, "mode " + to_string(mode) + " final hard_HL " + format_number(gan.curve.back().hard_hl));
}

CompletionPipeline load_pipeline(const RunDir& rd, TrainingMode mode) {
  const fs::path p = rd.gan_checkpoint(mode);
  if (!fs::exists(p)) {
    throw MissingArtifact("missing checkpoint " + p.string() + " (run train-gan for mode " + to_string(mode) + " first)");
  }
  const auto ckpt = nn::load_checkpoint(p);
  TrainedGan gan = gan_from_checkpoint(ckpt);
  auto check_digest = [&](const char* key, bool partial) {
    auto it = ckpt.meta.find(key);
    if (it == ckpt.meta.end()) throw CheckpointError(p.string() + " does not record its autoencoder digest");
    if (it->second != file_digest(rd.ae_checkpoint(partial))) {
      throw CheckpointError(p.string() + " was trained against a different autoencoder checkpoint");
    }
  };
  Autoencoder clean = require_ae(rd, false);
  check_digest("clean_ae_digest", false);
  std::optional<Autoencoder> partial;
  if (needs_partial_ae(gan.mode)) {
    partial = require_ae(rd, true);
    check_digest("partial_ae_digest", true);
  }
  return CompletionPipeline(std::move(clean), std::move(partial), std::move(gan.generator));
}

bool checkpoint_current(const Context& ctx, const RunDir& rd, TrainingMode mode) {
  const fs::path p = rd.gan_checkpoint(mode);
  if (!fs::exists(p)) return false;
  const auto ckpt = nn::load_checkpoint(p);
  auto it = ckpt.meta.find("config_digest");
  if (it == ckpt.meta.end() || it->second != training_digest(ctx.cfg)) return false;
  auto clean = ckpt.meta.find("clean_ae_digest");
  return clean != ckpt.meta.end() && clean->second == file_digest(rd.ae_checkpoint(false));
}

std::vector<PointSet> values(const std::vector<std::pair<std::string, PointSet>>& named) {
  std::vector<PointSet> out;
  for (const auto& [name, cloud] : named) out.push_back(cloud);
  return out;
}

std::vector<PointSet> paired(const std::vector<std::pair<std::string, PointSet>>& ref,
                             const std::vector<std::pair<std::string, PointSet>>& other, const std::string& what) {
  std::map<std::string, const PointSet*> by_name;
  for (const auto& [name, cloud] : other) by_name[name] = &cloud;
  std::vector<PointSet> out;
  for (const auto& [name, cloud] : ref) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw MissingArtifact(what + " has no file " + name);
    out.push_back(*it->second);
  }
  return out;
}

}  // namespace

int report_failure(std::ostream& err) {
  try {
    throw;
  } catch (const ConfigError& e) {
    err << "error [config schema violation]: " << e.what() << "\n";
    return kExitConfig;
  } catch (const MissingArtifact& e) {
    err << "error [missing artifact]: " << e.what() << "\n";
    return kExitMissingArtifact;
  } catch (const MalformedPly& e) {
    err << "error [malformed PLY]: " << e.what() << "\n";
    return kExitMalformedPly;
  } catch (const CheckpointError& e) {
    err << "error [checkpoint]: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const RunDirLocked& e) {
    err << "error [run directory locked]: " << e.what() << "\n";
    return kExitLocked;
  } catch (const NumericError& e) {
    err << "error [numeric divergence]: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const InvalidArgument& e) {
    err << "error [invalid argument]: " << e.what() << "\n";
    return kExitInvalidArgument;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

RunDir::RunDir(fs::path root, const ExperimentConfig& cfg) : root_(std::move(root)) {
  fs::create_directories(root_);
  lock_ = root_ / ".lock";
  std::FILE* f = std::fopen(lock_.c_str(), "wx");
  if (!f) {
    throw RunDirLocked(root_.string() + " is in use by another process (delete " + lock_.string() +
                       " if that process is gone)");
  }
  std::fprintf(f, "%ld\n", static_cast<long>(::getpid()));
  std::fclose(f);
  try {
    const std::string resolved = to_json(cfg).dump(2) + "\n";
    const fs::path path = root_ / "config.json";
    if (fs::exists(path)) {
      std::ifstream in(path, std::ios::binary);
      const std::string stored((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      if (stored != resolved) {
        throw ConfigError(root_.string() + " was created with a different config; use a new run directory");
      }
    } else {
      open_out(path) << resolved;
    }
  } catch (...) {
    std::error_code ec;
    fs::remove(lock_, ec);
    throw;
  }
}

RunDir::~RunDir() {
  std::error_code ec;
  fs::remove(lock_, ec);
}

fs::path RunDir::ae_checkpoint(bool partial) const {
  return root_ / "ae" / (partial ? "partial.ckpt.json" : "clean.ckpt.json");
}

fs::path RunDir::gan_checkpoint(TrainingMode mode) const {
  return root_ / "gan" / (to_string(mode) + ".ckpt.json");
}

std::optional<ExperimentConfig> stored_config(const fs::path& run_dir) {
  if (!fs::exists(run_dir / "config.json")) return std::nullopt;
  return load_config((run_dir / "config.json").string());
}

void cmd_synth(const Context& ctx) {
  RunDir rd(ctx.run_dir, ctx.cfg);
  log_line(ctx, "synthesizing dataset");
  const Dataset ds = make_dataset(ctx.cfg.dataset);
  save_dataset(rd.dataset_dir(), ds, ctx.cfg.dataset);
  log_line(ctx, "wrote " + std::to_string(ds.clean_train.size()) + " clean train, " +
                    std::to_string(ds.clean_test.size()) + " clean test, " +
                    std::to_string(ds.partial_train.size()) + " partial train clouds to " +
                    rd.dataset_dir().string());
}

void cmd_train_ae(const Context& ctx, bool partial) {
  RunDir rd(ctx.run_dir, ctx.cfg);
  const Dataset ds = require_dataset(rd);
  train_ae_into(ctx, rd, ds.clouds(ds.clean_train), false);
  if (partial || needs_partial_ae(ctx.cfg.mode)) train_ae_into(ctx, rd, ds.clouds(ds.partial_train), true);
}

void cmd_train_gan(const Context& ctx) {
  RunDir rd(ctx.run_dir, ctx.cfg);
  const Dataset ds = require_dataset(rd);
  train_mode(ctx, rd, ds, ctx.cfg.mode);
}

void cmd_complete(const Context& ctx, const std::optional<fs::path>& input_dir,
                  const std::optional<fs::path>& output_dir) {
  RunDir rd(ctx.run_dir, ctx.cfg);
  const fs::path in = input_dir ? *input_dir : rd.dataset_dir() / "partial_test";
  const fs::path out = output_dir ? *output_dir : rd.root() / "completions" / to_string(ctx.cfg.mode);
  CompletionPipeline pipeline = load_pipeline(rd, ctx.cfg.mode);
  const auto inputs = read_dir(in, "input");
  const auto done = pipeline.complete(values(inputs));
  fs::create_directories(out);
  for (std::size_t i = 0; i < done.size(); ++i) {
    fs::path name = inputs[i].first;
    write_ply(out / name.replace_extension(".ply"), done[i]);
  }
  log_line(ctx, "completed " + std::to_string(done.size()) + " clouds into " + out.string());
}

void cmd_eval(const Context& ctx, const std::optional<fs::path>& completions_dir,
              const std::optional<fs::path>& gt_dir, const std::optional<fs::path>& inputs_dir) {
  RunDir rd(ctx.run_dir, ctx.cfg);
  const fs::path comp_dir = completions_dir ? *completions_dir : rd.root() / "completions" / to_string(ctx.cfg.mode);
  const auto comps = read_dir(comp_dir, "completions");
  const bool default_gt = !gt_dir;
  const auto gts = read_dir(default_gt ? rd.dataset_dir() / "clean_test" : *gt_dir, "ground truth");
  std::vector<PointSet> inputs;
  if (inputs_dir || default_gt) {
    inputs = paired(comps, read_dir(inputs_dir ? *inputs_dir : rd.dataset_dir() / "partial_test", "inputs"), "inputs");
  }
  const auto completions = values(comps);
  const auto truth = paired(comps, gts, "ground truth");
  const MetricsReport report = evaluate(completions, truth, ctx.cfg.eval.eps, inputs);

  const fs::path out = rd.root() / "eval" / comp_dir.filename();
  write_metrics_csv(out / "metrics.csv", report);
  write_metrics_json(out / "metrics.json", report);

  Rng rng(ctx.cfg.seed + 3);
  const auto reference = mode_collapse_reference(truth, rng);
  json diversity = {{"grid", ctx.cfg.eval.jsd_grid},
                    {"jsd_gt_completions", jsd(truth, completions, ctx.cfg.eval.jsd_grid)},
                    {"jsd_gt_reference", jsd(truth, reference, ctx.cfg.eval.jsd_grid)}};
  if (default_gt) {
    // Plausibility stand-in: family recovered from clean-AE latents.
    const Dataset ds = require_dataset(rd);
    Autoencoder ae = require_ae(rd, false);
    std::vector<std::string> train_labels, test_labels;
    for (const auto& it : ds.clean_train) train_labels.push_back(to_string(it.params.family));
    std::map<std::string, std::string> family_of;
    char buf[32];
    for (const auto& it : ds.clean_test) {
      std::snprintf(buf, sizeof(buf), "%06zu.ply", it.instance);
      family_of[buf] = to_string(it.params.family);
    }
    for (const auto& [name, cloud] : comps) test_labels.push_back(family_of.at(name));
    CentroidClassifier clf;
    clf.fit(ae.encode(ds.clouds(ds.clean_train)), train_labels);
    diversity["family_classifier_accuracy"] = clf.score(ae.encode(completions), test_labels);
  }
  open_out(out / "diversity.json") << diversity.dump(2) << "\n";
  log_line(ctx, "F1 " + format_number(report.mean.f1) + ", EMD " + format_number(report.mean.emd) +
                    "; reports in " + out.string());
}

void cmd_sweep(const Context& ctx) {
  RunDir rd(ctx.run_dir, ctx.cfg);
  const Dataset ds = require_dataset(rd);
  CompletionPipeline pipeline = load_pipeline(rd, ctx.cfg.mode);
  Autoencoder ae = require_ae(rd, false);
  std::vector<SweepInput> levels;
  for (double r : ctx.cfg.dataset.sweep_r) {
    auto it = ds.partial_test_sweep.find(r_label(r));
    if (it == ds.partial_test_sweep.end()) throw MissingArtifact("dataset has no sweep partials for " + r_label(r));
    levels.push_back({r, ds.clouds(it->second), ds.clouds(ds.clean_test)});
  }
  const auto rows = incompleteness_sweep(pipeline, ae, levels, ctx.cfg.eval.eps);
  write_sweep_csv(rd.root() / "sweep" / "sweep.csv", rows);
  for (const auto& r : rows) {
    log_line(ctx, "r " + format_number(r.r) + ": F1 AE " + format_number(r.f1_ae) + ", F1 ours " + format_number(r.f1_ours));
  }
}

void cmd_ablate(const Context& ctx) {
  RunDir rd(ctx.run_dir, ctx.cfg);
  const Dataset ds = require_dataset(rd);
  require_ae(rd, false);
  const auto partial_test = ds.clouds(ds.partial_test);
  const auto clean_test = ds.clouds(ds.clean_test);
  auto out = open_out(rd.root() / "ablate" / "ablation.csv");
  out << "mode,alpha,beta,recon,target,latent_source,accuracy,completeness,f1,emd,chamfer,hausdorff_sym,hl\n";
  for (TrainingMode mode : ctx.cfg.ablate_modes) {
    if (needs_partial_ae(mode) && !fs::exists(rd.ae_checkpoint(true))) {
      train_ae_into(ctx, rd, ds.clouds(ds.partial_train), true);
    }
    if (!checkpoint_current(ctx, rd, mode)) {
      train_mode(ctx, rd, ds, mode);
    } else {
      log_line(ctx, "reusing " + rd.gan_checkpoint(mode).string());
    }
    CompletionPipeline pipeline = load_pipeline(rd, mode);
    const auto report = evaluate(pipeline.complete(partial_test), clean_test, ctx.cfg.eval.eps, partial_test);
    const ModeSettings s = settings_for(mode, ctx.cfg.gan_train.tau);
    LossWeights w = s.weights;
    if (ctx.cfg.gan_train.alpha) w.alpha = *ctx.cfg.gan_train.alpha;
    if (ctx.cfg.gan_train.beta) w.beta = *ctx.cfg.gan_train.beta;
    const auto& m = report.mean;
    out << to_string(mode) << ',' << format_number(w.alpha) << ',' << format_number(w.beta) << ','
        << (w.recon == ReconKind::Hausdorff ? "hl" : "emd") << ','
        << (s.recon_against_ground_truth ? "ground_truth" : "input") << ','
        << (s.use_partial_ae ? "partial_ae" : "clean_ae") << ',' << format_number(m.accuracy) << ','
        << format_number(m.completeness) << ',' << format_number(m.f1) << ',' << format_number(m.emd) << ','
        << format_number(m.chamfer) << ',' << format_number(m.hausdorff_sym) << ',' << format_number(m.hl) << "\n";
    out.flush();
    log_line(ctx, "ablation " + to_string(mode) + ": F1 " + format_number(m.f1) + ", EMD " + format_number(m.emd) +
                      ", hl " + format_number(m.hl));
  }
}

}  // namespace upcc::cli
