#include "upcc/latent_gan.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "upcc/distances.hpp"
#include "upcc/error.hpp"

namespace upcc {

namespace {

std::vector<std::size_t> append(std::vector<std::size_t> v, std::size_t tail) {
  v.push_back(tail);
  return v;
}

std::string join(const std::vector<std::size_t>& v) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < v.size(); ++i) ss << (i ? "," : "") << v[i];
  return ss.str();
}

std::vector<std::size_t> split_widths(const std::string& s) {
  std::vector<std::size_t> out;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoul(tok));
  }
  return out;
}

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

std::vector<double> scores_of(const nn::Tensor& t) { return t.data; }

nn::Tensor score_grad(const std::vector<double>& g) {
  nn::Tensor t(g.size(), 1, 1);
  t.data = g;
  return t;
}

// Discriminator objective and its gradient with respect to each score.
double disc_objective(GanLossKind kind, const std::vector<double>& real,
                      const std::vector<double>& fake, std::vector<double>* g_real,
                      std::vector<double>* g_fake) {
  const double nr = static_cast<double>(real.size()), nf = static_cast<double>(fake.size());
  double value = 0.0;
  if (g_real) g_real->assign(real.size(), 0.0);
  if (g_fake) g_fake->assign(fake.size(), 0.0);
  for (std::size_t i = 0; i < real.size(); ++i) {
    if (kind == GanLossKind::LeastSquares) {
      value += (real[i] - 1.0) * (real[i] - 1.0) / nr;
      if (g_real) (*g_real)[i] = 2.0 * (real[i] - 1.0) / nr;
    } else {
      value += softplus(-real[i]) / nr;
      if (g_real) (*g_real)[i] = (sigmoid(real[i]) - 1.0) / nr;
    }
  }
  for (std::size_t i = 0; i < fake.size(); ++i) {
    if (kind == GanLossKind::LeastSquares) {
      value += fake[i] * fake[i] / nf;
      if (g_fake) (*g_fake)[i] = 2.0 * fake[i] / nf;
    } else {
      value += softplus(fake[i]) / nf;
      if (g_fake) (*g_fake)[i] = sigmoid(fake[i]) / nf;
    }
  }
  return value;
}

// Adversarial generator term. The log variant minimizes log(1 - D(G(z))).
double adversarial_objective(GanLossKind kind, const std::vector<double>& fake,
                             std::vector<double>* g_fake) {
  const double nf = static_cast<double>(fake.size());
  double value = 0.0;
  if (g_fake) g_fake->assign(fake.size(), 0.0);
  for (std::size_t i = 0; i < fake.size(); ++i) {
    if (kind == GanLossKind::LeastSquares) {
      value += (fake[i] - 1.0) * (fake[i] - 1.0) / nf;
      if (g_fake) (*g_fake)[i] = 2.0 * (fake[i] - 1.0) / nf;
    } else {
      value += -softplus(fake[i]) / nf;
      if (g_fake) (*g_fake)[i] = -sigmoid(fake[i]) / nf;
    }
  }
  return value;
}

std::vector<LatentCode> encode_all(Autoencoder& ae, std::span<const PointSet> sets) {
  constexpr std::size_t kChunk = 64;
  std::vector<LatentCode> out;
  out.reserve(sets.size());
  for (std::size_t s = 0; s < sets.size(); s += kChunk) {
    auto codes = ae.encode(sets.subspan(s, std::min(kChunk, sets.size() - s)));
    out.insert(out.end(), codes.begin(), codes.end());
  }
  return out;
}

}  // namespace

void GanSpec::validate() const {
  if (k == 0) throw InvalidArgument("gan: latent width must be positive");
  for (auto w : generator_hidden) {
    if (w == 0) throw InvalidArgument("gan: generator widths must be positive");
  }
  for (auto w : discriminator_hidden) {
    if (w == 0) throw InvalidArgument("gan: discriminator widths must be positive");
  }
}

void LossWeights::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw InvalidArgument("loss weights must be non-negative");
  if (!(alpha + beta > 0.0)) throw InvalidArgument("alpha + beta must be positive");
  if (!(tau > 0.0)) throw InvalidArgument("soft Hausdorff temperature must be positive");
}

std::string to_string(TrainingMode mode) {
  switch (mode) {
    case TrainingMode::Default: return "default";
    case TrainingMode::PartialAe: return "partial_ae";
    case TrainingMode::EmdRecon: return "emd_recon";
    case TrainingMode::NoGan: return "no_gan";
    case TrainingMode::NoRecon: return "no_recon";
    case TrainingMode::SupervisedEmd: return "supervised_emd";
    case TrainingMode::SupervisedEmdGan: return "supervised_emd_gan";
  }
  return "unknown";
}

const std::vector<TrainingMode>& all_training_modes() {
  static const std::vector<TrainingMode> modes = {
      TrainingMode::PartialAe, TrainingMode::EmdRecon,      TrainingMode::NoGan,
      TrainingMode::NoRecon,   TrainingMode::Default,       TrainingMode::SupervisedEmd,
      TrainingMode::SupervisedEmdGan};
  return modes;
}

TrainingMode training_mode_from_string(const std::string& s) {
  for (auto m : all_training_modes()) {
    if (to_string(m) == s) return m;
  }
  throw InvalidArgument("unknown training mode '" + s + "'");
}

ModeSettings settings_for(TrainingMode mode, double tau) {
  ModeSettings s;
  s.weights.tau = tau;
  switch (mode) {
    case TrainingMode::Default:
      break;
    case TrainingMode::PartialAe:
      s.use_partial_ae = true;
      break;
    case TrainingMode::EmdRecon:
      s.weights.recon = ReconKind::Emd;
      break;
    case TrainingMode::NoGan:
      s.weights.alpha = 0.0;
      s.weights.beta = 1.0;
      s.update_discriminator = false;
      break;
    case TrainingMode::NoRecon:
      s.weights.alpha = 1.0;
      s.weights.beta = 0.0;
      break;
    case TrainingMode::SupervisedEmd:
      s.weights = {0.0, 1.0, ReconKind::Emd, tau};
      s.recon_against_ground_truth = true;
      s.update_discriminator = false;
      break;
    case TrainingMode::SupervisedEmdGan:
      s.weights.recon = ReconKind::Emd;
      s.recon_against_ground_truth = true;
      break;
  }
  return s;
}

double disc_loss(std::span<const double> real_scores, std::span<const double> fake_scores) {
  if (real_scores.empty() || fake_scores.empty()) throw InvalidArgument("disc_loss: empty batch");
  return disc_objective(GanLossKind::LeastSquares, {real_scores.begin(), real_scores.end()},
                        {fake_scores.begin(), fake_scores.end()}, nullptr, nullptr);
}

double gen_adversarial_loss(std::span<const double> fake_scores) {
  if (fake_scores.empty()) throw InvalidArgument("gen_loss: empty batch");
  return adversarial_objective(GanLossKind::LeastSquares, {fake_scores.begin(), fake_scores.end()},
                               nullptr);
}

double gen_loss(std::span<const double> fake_scores, std::span<const PointSet> inputs,
                std::span<const PointSet> completions, const LossWeights& w) {
  w.validate();
  if (inputs.size() != completions.size() || inputs.empty()) {
    throw InvalidArgument("gen_loss: inputs and completions must pair up");
  }
  double recon = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    recon += w.recon == ReconKind::Hausdorff ? hausdorff_directed(inputs[i], completions[i])
                                             : emd(inputs[i], completions[i]).cost;
  }
  recon /= static_cast<double>(inputs.size());
  return w.alpha * gen_adversarial_loss(fake_scores) + w.beta * recon;
}

double gen_recon_term(std::span<const PointSet> targets, std::span<const PointSet> completions,
                      const LossWeights& w, std::vector<std::vector<Vec3>>* grad) {
  if (targets.size() != completions.size() || targets.empty()) {
    throw InvalidArgument("recon term: targets and completions must pair up");
  }
  const double inv_b = 1.0 / static_cast<double>(targets.size());
  double value = 0.0;
  if (grad) grad->assign(targets.size(), {});
  for (std::size_t b = 0; b < targets.size(); ++b) {
    std::vector<Vec3> g;
    if (w.recon == ReconKind::Hausdorff) {
      auto soft = hausdorff_directed_grad(targets[b], completions[b], w.tau);
      value += soft.value * inv_b;
      g = std::move(soft.grad_r);
    } else {
      auto eg = emd_with_grad(completions[b], targets[b]);
      value += eg.assignment.cost * inv_b;
      g = std::move(eg.grad_a);
    }
    if (grad) {
      for (auto& v : g) v *= inv_b;
      (*grad)[b] = std::move(g);
    }
  }
  return value;
}

GeneratorObjective generator_objective(nn::Network& generator, nn::Network& discriminator,
                                       nn::Network& decoder, const nn::Tensor& z,
                                       std::span<const PointSet> inputs,
                                       std::span<const PointSet> targets, const LossWeights& w,
                                       GanLossKind kind, bool backward) {
  if (inputs.size() != z.batch || targets.size() != z.batch) {
    throw InvalidArgument("generator objective: batch sizes differ");
  }
  GeneratorObjective obj;
  const nn::Tensor fake = generator.forward(z);
  nn::Tensor grad_fake(fake.batch, fake.points, fake.features);

  std::vector<double> g_adv;
  const auto fake_scores = scores_of(discriminator.forward(fake));
  obj.adv = adversarial_objective(kind, fake_scores, &g_adv);
  if (backward && w.alpha > 0.0) {
    for (auto& g : g_adv) g *= w.alpha;
    discriminator.zero_grad();
    const nn::Tensor g_from_f = discriminator.backward(score_grad(g_adv));
    for (std::size_t i = 0; i < grad_fake.size(); ++i) grad_fake.data[i] += g_from_f.data[i];
    discriminator.zero_grad();
  }

  const nn::Tensor decoded = decoder.forward(fake);
  const auto completions = clouds_from_tensor(decoded);
  if (w.beta > 0.0) {
    std::vector<std::vector<Vec3>> g_recon;
    obj.recon = gen_recon_term(targets, completions, w, backward ? &g_recon : nullptr);
    if (backward) {
      nn::Tensor g_dec(decoded.batch, decoded.points, decoded.features);
      const std::size_t n = completions.front().size();
      for (std::size_t b = 0; b < g_recon.size(); ++b) {
        for (std::size_t p = 0; p < n; ++p) {
          for (int c = 0; c < 3; ++c) g_dec.data[(b * n + p) * 3 + c] = w.beta * g_recon[b][p][c];
        }
      }
      decoder.zero_grad();
      const nn::Tensor g_from_dec = decoder.backward(g_dec);
      for (std::size_t i = 0; i < grad_fake.size(); ++i) grad_fake.data[i] += g_from_dec.data[i];
      decoder.zero_grad();
    }
  }
  if (backward) generator.backward(grad_fake);

  for (std::size_t b = 0; b < inputs.size(); ++b) obj.hard_hl += hausdorff_directed(inputs[b], completions[b]);
  obj.hard_hl /= static_cast<double>(inputs.size());
  obj.loss = w.alpha * obj.adv + w.beta * obj.recon;
  return obj;
}

GanTrainConfig GanTrainConfig::preset(const std::string& name) {
  if (name == "paper" || name == "paper-scale") return paper();
  if (name == "desk" || name == "desk-scale") return desk();
  throw InvalidArgument("unknown GAN training preset '" + name + "'");
}

TrainedGan train_gan(const GanTrainingData& data, Autoencoder& clean_ae, Autoencoder& source_ae,
                     TrainingMode mode, const GanTrainConfig& cfg,
                     const std::function<void(const GanEpochStats&)>& on_epoch) {
  ModeSettings settings = settings_for(mode, cfg.tau);
  if (cfg.alpha) settings.weights.alpha = *cfg.alpha;
  if (cfg.beta) settings.weights.beta = *cfg.beta;
  settings.weights.validate();
  const LossWeights& w = settings.weights;
  if (data.clean_train.empty() || data.partial_train.empty()) {
    throw InvalidArgument("train_gan: empty training set");
  }
  if (settings.recon_against_ground_truth && data.partial_train_gt.size() != data.partial_train.size()) {
    throw InvalidArgument("train_gan: supervised mode needs ground truth for every partial input");
  }
  if (cfg.batch_size == 0) throw InvalidArgument("train_gan: batch size must be positive");
  const std::size_t k = clean_ae.spec().k;
  if (source_ae.spec().k != k || source_ae.spec().n != clean_ae.spec().n) {
    throw InvalidArgument("train_gan: source and clean autoencoders disagree on n or k");
  }

  clean_ae.set_mode(nn::Mode::Infer);
  source_ae.set_mode(nn::Mode::Infer);
  const auto z_clean = encode_all(clean_ae, data.clean_train);
  const auto z_source = encode_all(source_ae, data.partial_train);
  nn::Network& decoder = clean_ae.decoder();

  TrainedGan out;
  out.spec = cfg.network;
  out.spec.k = k;
  out.spec.validate();
  out.mode = mode;
  out.weights = w;
  Rng rng(cfg.seed);
  Rng init_rng = rng.fork(0);
  Rng order_rng = rng.fork(1);
  out.generator = nn::Network(nn::mlp_specs(k, append(out.spec.generator_hidden, k)), init_rng);
  out.discriminator =
      nn::Network(nn::mlp_specs(k, append(out.spec.discriminator_hidden, 1)), init_rng);
  out.generator_opt = nn::AdamState(cfg.adam, out.generator.param_count());
  out.discriminator_opt = nn::AdamState(cfg.adam, out.discriminator.param_count());
  nn::Network& G = out.generator;
  nn::Network& F = out.discriminator;

  std::vector<std::size_t> partial_order(data.partial_train.size());
  std::iota(partial_order.begin(), partial_order.end(), 0);
  std::vector<std::size_t> clean_order(data.clean_train.size());
  std::iota(clean_order.begin(), clean_order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::vector<double> g_snapshot(G.params().begin(), G.params().end());
    const std::vector<double> f_snapshot(F.params().begin(), F.params().end());
    const nn::AdamState g_opt_snapshot = out.generator_opt;
    const nn::AdamState f_opt_snapshot = out.discriminator_opt;
    GanEpochStats stats;
    stats.epoch = epoch;
    std::size_t batches = 0;
    try {
      order_rng.shuffle(partial_order.begin(), partial_order.end());
      order_rng.shuffle(clean_order.begin(), clean_order.end());
      std::size_t clean_cursor = 0;
      for (std::size_t start = 0; start < partial_order.size(); start += cfg.batch_size) {
        const std::size_t stop = std::min(partial_order.size(), start + cfg.batch_size);
        std::vector<LatentCode> zb;
        std::vector<PointSet> inputs, targets;
        for (std::size_t i = start; i < stop; ++i) {
          const std::size_t idx = partial_order[i];
          zb.push_back(z_source[idx]);
          inputs.push_back(data.partial_train[idx]);
          targets.push_back(settings.recon_against_ground_truth ? data.partial_train_gt[idx]
                                                                : data.partial_train[idx]);
        }
        const nn::Tensor z_in = codes_tensor(zb);

        double loss_f = 0.0;
        for (std::size_t step = 0; step < std::max<std::size_t>(1, cfg.discriminator_steps); ++step) {
          std::vector<LatentCode> real;
          for (std::size_t i = 0; i < zb.size(); ++i) {
            real.push_back(z_clean[clean_order[clean_cursor]]);
            clean_cursor = (clean_cursor + 1) % clean_order.size();
          }
          // The fake batch is a plain forward of G: no gradient reaches G here.
          const nn::Tensor fake = G.forward(z_in);
          F.zero_grad();
          const auto real_scores = scores_of(F.forward(codes_tensor(real)));
          std::vector<double> g_real, g_fake;
          if (!settings.update_discriminator) {
            const auto fake_scores = scores_of(F.forward(fake));
            loss_f = disc_objective(cfg.loss_kind, real_scores, fake_scores, nullptr, nullptr);
            break;
          }
          // Gradients of both halves are needed before the fake forward
          // overwrites the cached real activations.
          disc_objective(cfg.loss_kind, real_scores, real_scores, &g_real, nullptr);
          F.backward(score_grad(g_real));
          const auto fake_scores = scores_of(F.forward(fake));
          loss_f = disc_objective(cfg.loss_kind, real_scores, fake_scores, nullptr, &g_fake);
          F.backward(score_grad(g_fake));
          nn::adam_step(out.discriminator_opt, F.params(), F.grads());
        }

        G.zero_grad();
        const GeneratorObjective obj =
            generator_objective(G, F, decoder, z_in, inputs, targets, w, cfg.loss_kind, true);
        nn::adam_step(out.generator_opt, G.params(), G.grads());
        const double loss_g = obj.loss;
        const double hard_hl = obj.hard_hl;
        const double adv = obj.adv;
        if (!std::isfinite(loss_f) || !std::isfinite(loss_g)) {
          throw NumericError("non-finite GAN loss");
        }
        stats.loss_f += loss_f;
        stats.loss_g += loss_g;
        stats.hard_hl += hard_hl;
        stats.adv_term += adv;
        ++batches;
      }
    } catch (const NumericError& e) {
      std::copy(g_snapshot.begin(), g_snapshot.end(), G.params().begin());
      std::copy(f_snapshot.begin(), f_snapshot.end(), F.params().begin());
      out.generator_opt = g_opt_snapshot;
      out.discriminator_opt = f_opt_snapshot;
      out.diverged = true;
      out.diagnostic = "diverged in epoch " + std::to_string(epoch) + ": " + e.what();
      break;
    }
    const double nb = static_cast<double>(batches);
    stats.loss_f /= nb;
    stats.loss_g /= nb;
    stats.hard_hl /= nb;
    stats.adv_term /= nb;
    out.curve.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  G.set_mode(nn::Mode::Infer);
  F.set_mode(nn::Mode::Infer);
  return out;
}

CompletionPipeline::CompletionPipeline(Autoencoder clean_ae, std::optional<Autoencoder> partial_ae,
                                       nn::Network generator)
    : clean_ae_(std::move(clean_ae)), partial_ae_(std::move(partial_ae)), generator_(std::move(generator)) {
  const std::size_t k = clean_ae_.spec().k;
  if (generator_.param_count() == 0) throw InvalidArgument("completion pipeline: untrained generator");
  if (generator_.input_features() != k || generator_.output_features() != k) {
    throw InvalidArgument("completion pipeline: generator width does not match the autoencoder");
  }
  if (partial_ae_ && (partial_ae_->spec().k != k || partial_ae_->spec().n != clean_ae_.spec().n)) {
    throw InvalidArgument("completion pipeline: partial autoencoder does not match the clean one");
  }
  clean_ae_.set_mode(nn::Mode::Infer);
  if (partial_ae_) partial_ae_->set_mode(nn::Mode::Infer);
  generator_.set_mode(nn::Mode::Infer);
}

PointSet CompletionPipeline::complete(const PointSet& partial) {
  return complete(std::span<const PointSet>(&partial, 1)).front();
}

std::vector<PointSet> CompletionPipeline::complete(std::span<const PointSet> partials) {
  Autoencoder& source = partial_ae_ ? *partial_ae_ : clean_ae_;
  const auto codes = encode_all(source, partials);
  const nn::Tensor mapped = generator_.forward(codes_tensor(codes));
  return clouds_from_tensor(clean_ae_.decoder().forward(mapped));
}

std::vector<PointSet> autoencoder_baseline(Autoencoder& clean_ae, std::span<const PointSet> partials) {
  clean_ae.set_mode(nn::Mode::Infer);
  return clean_ae.decode(encode_all(clean_ae, partials));
}

nn::Checkpoint to_checkpoint(const TrainedGan& gan, std::uint64_t seed) {
  nn::Checkpoint ckpt;
  ckpt.kind = "latent_gan";
  ckpt.seed = seed;
  ckpt.meta["mode"] = to_string(gan.mode);
  ckpt.meta["k"] = std::to_string(gan.spec.k);
  ckpt.meta["generator_hidden"] = join(gan.spec.generator_hidden);
  ckpt.meta["discriminator_hidden"] = join(gan.spec.discriminator_hidden);
  std::ostringstream a, b, t;
  a.precision(17);
  b.precision(17);
  t.precision(17);
  a << gan.weights.alpha;
  b << gan.weights.beta;
  t << gan.weights.tau;
  ckpt.meta["alpha"] = a.str();
  ckpt.meta["beta"] = b.str();
  ckpt.meta["tau"] = t.str();
  ckpt.meta["recon"] = gan.weights.recon == ReconKind::Hausdorff ? "hl" : "emd";
  if (gan.diverged) ckpt.meta["diagnostic"] = gan.diagnostic;
  ckpt.networks.emplace("generator", gan.generator);
  ckpt.networks.emplace("discriminator", gan.discriminator);
  ckpt.optimizers.emplace("generator", gan.generator_opt);
  ckpt.optimizers.emplace("discriminator", gan.discriminator_opt);
  return ckpt;
}

TrainedGan gan_from_checkpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.kind != "latent_gan") {
    throw CheckpointError("expected a latent_gan checkpoint, found '" + ckpt.kind + "'");
  }
  try {
    TrainedGan gan;
    gan.mode = training_mode_from_string(ckpt.meta.at("mode"));
    gan.spec.k = std::stoul(ckpt.meta.at("k"));
    gan.spec.generator_hidden = split_widths(ckpt.meta.at("generator_hidden"));
    gan.spec.discriminator_hidden = split_widths(ckpt.meta.at("discriminator_hidden"));
    gan.weights.alpha = std::stod(ckpt.meta.at("alpha"));
    gan.weights.beta = std::stod(ckpt.meta.at("beta"));
    gan.weights.tau = std::stod(ckpt.meta.at("tau"));
    gan.weights.recon = ckpt.meta.at("recon") == "hl" ? ReconKind::Hausdorff : ReconKind::Emd;
    Rng unused(0);
    nn::Network g(nn::mlp_specs(gan.spec.k, append(gan.spec.generator_hidden, gan.spec.k)), unused);
    nn::Network f(nn::mlp_specs(gan.spec.k, append(gan.spec.discriminator_hidden, 1)), unused);
    nn::restore_into(g, ckpt.networks.at("generator"), "generator");
    nn::restore_into(f, ckpt.networks.at("discriminator"), "discriminator");
    gan.generator = std::move(g);
    gan.discriminator = std::move(f);
    if (auto it = ckpt.optimizers.find("generator"); it != ckpt.optimizers.end()) gan.generator_opt = it->second;
    if (auto it = ckpt.optimizers.find("discriminator"); it != ckpt.optimizers.end()) {
      gan.discriminator_opt = it->second;
    }
    return gan;
  } catch (const std::out_of_range&) {
    throw CheckpointError("latent_gan checkpoint lacks required fields");
  } catch (const std::invalid_argument&) {
    throw CheckpointError("latent_gan checkpoint has malformed fields");
  }
}

}  // namespace upcc
