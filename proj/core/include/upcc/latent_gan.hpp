#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "upcc/autoencoder.hpp"
#include "upcc/nn/adam.hpp"
#include "upcc/nn/checkpoint.hpp"
#include "upcc/nn/network.hpp"
#include "upcc/point_set.hpp"

namespace upcc {

/// Generator k -> generator_hidden... -> k and discriminator
/// k -> discriminator_hidden... -> 1, ReLU between layers.
struct GanSpec {
  std::size_t k = 16;
  std::vector<std::size_t> generator_hidden{128};
  std::vector<std::size_t> discriminator_hidden{256, 512};

  void validate() const;
};

enum class ReconKind { Hausdorff, Emd };
enum class GanLossKind { LeastSquares, Log };

struct LossWeights {
  double alpha = 0.25;
  double beta = 0.75;
  ReconKind recon = ReconKind::Hausdorff;
  double tau = 0.01;

  void validate() const;
};

enum class TrainingMode {
  Default,           // HL reconstruction, clean AE as latent source
  PartialAe,         // latent source is an AE trained on partial clouds
  EmdRecon,          // EMD instead of HL against the partial input
  NoGan,             // alpha = 0, beta = 1
  NoRecon,           // alpha = 1, beta = 0
  SupervisedEmd,     // alpha = 0, EMD against paired ground truth
  SupervisedEmdGan,  // EMD against paired ground truth plus adversarial term
};

std::string to_string(TrainingMode mode);
TrainingMode training_mode_from_string(const std::string& s);
const std::vector<TrainingMode>& all_training_modes();

struct ModeSettings {
  LossWeights weights;
  bool recon_against_ground_truth = false;
  bool use_partial_ae = false;
  bool update_discriminator = true;
};

ModeSettings settings_for(TrainingMode mode, double tau = 0.01);

/// Least-squares discriminator loss mean[(F(real) - 1)^2] + mean[F(fake)^2].
double disc_loss(std::span<const double> real_scores, std::span<const double> fake_scores);

/// Adversarial part of the generator objective, mean[(F(fake) - 1)^2].
double gen_adversarial_loss(std::span<const double> fake_scores);

/// alpha * mean[(F(fake) - 1)^2] + beta * recon(input -> completion), with
/// recon the hard directed Hausdorff distance or EMD, averaged over the batch.
double gen_loss(std::span<const double> fake_scores, std::span<const PointSet> inputs,
                std::span<const PointSet> completions, const LossWeights& w);

/// Generator loss that is actually differentiated: the soft Hausdorff
/// distance replaces the hard one. Returns the value and writes
/// d loss / d completion (one Vec3 per point, per batch item).
double gen_recon_term(std::span<const PointSet> targets, std::span<const PointSet> completions,
                      const LossWeights& w, std::vector<std::vector<Vec3>>* grad);

struct GeneratorObjective {
  double loss = 0.0;     // alpha * adv + beta * recon, the differentiated value
  double adv = 0.0;      // adversarial term before weighting
  double recon = 0.0;    // soft HL or EMD before weighting; 0 when beta = 0
  double hard_hl = 0.0;  // mean hard directed Hausdorff input -> completion
};

/// Generator objective on one batch of source codes: decode(G(z)) is scored
/// by the discriminator and compared with `targets`. With `backward` set,
/// dloss/dtheta is accumulated into generator.grads(); the gradients of the
/// frozen discriminator and decoder are left zeroed.
GeneratorObjective generator_objective(nn::Network& generator, nn::Network& discriminator,
                                       nn::Network& decoder, const nn::Tensor& z,
                                       std::span<const PointSet> inputs,
                                       std::span<const PointSet> targets, const LossWeights& w,
                                       GanLossKind kind, bool backward);

struct GanTrainConfig {
  /// Hidden widths; k is taken from the autoencoders.
  GanSpec network;
  nn::AdamConfig adam{0.0001, 0.5, 0.999, 1e-8};
  std::size_t batch_size = 24;
  std::size_t epochs = 1000;
  std::size_t discriminator_steps = 1;
  GanLossKind loss_kind = GanLossKind::LeastSquares;
  std::uint64_t seed = 42;
  /// Overrides the mode's alpha/beta when set.
  std::optional<double> alpha;
  std::optional<double> beta;
  double tau = 0.01;

  /// lr 0.0001, beta1 0.5, batch 24, 1000 epochs.
  static GanTrainConfig paper() { return {}; }
  static GanTrainConfig desk() {
    GanTrainConfig c;
    c.adam.lr = 0.0005;
    c.epochs = 300;
    return c;
  }
  static GanTrainConfig preset(const std::string& name);
};

struct GanEpochStats {
  std::size_t epoch = 0;
  double loss_f = 0.0;
  double loss_g = 0.0;
  double hard_hl = 0.0;   // mean hard directed Hausdorff input -> completion
  double adv_term = 0.0;  // mean[(F(fake) - 1)^2]
};

struct GanTrainingData {
  std::span<const PointSet> clean_train;
  std::span<const PointSet> partial_train;
  /// Paired ground truth for partial_train; supervised modes only.
  std::span<const PointSet> partial_train_gt;
};

struct TrainedGan {
  GanSpec spec;
  TrainingMode mode = TrainingMode::Default;
  LossWeights weights;
  nn::Network generator;
  nn::Network discriminator;
  nn::AdamState generator_opt;
  nn::AdamState discriminator_opt;
  std::vector<GanEpochStats> curve;
  bool diverged = false;
  std::string diagnostic;
};

/// Alternating training of generator and discriminator on frozen
/// autoencoders. `source_ae` encodes the partial inputs (the clean AE itself
/// unless the mode asks for a partial AE); `clean_ae` encodes real samples
/// and decodes completions. Neither autoencoder is modified. On a
/// non-finite loss the networks are rolled back to the last completed epoch
/// and `diverged` is set.
TrainedGan train_gan(const GanTrainingData& data, Autoencoder& clean_ae, Autoencoder& source_ae,
                     TrainingMode mode, const GanTrainConfig& cfg,
                     const std::function<void(const GanEpochStats&)>& on_epoch = {});

/// Frozen encoder -> generator -> clean decoder.
class CompletionPipeline {
 public:
  CompletionPipeline(Autoencoder clean_ae, std::optional<Autoencoder> partial_ae,
                     nn::Network generator);

  PointSet complete(const PointSet& partial);
  std::vector<PointSet> complete(std::span<const PointSet> partials);

  std::size_t n() const { return clean_ae_.spec().n; }
  Autoencoder& clean_ae() { return clean_ae_; }

 private:
  Autoencoder clean_ae_;
  std::optional<Autoencoder> partial_ae_;
  nn::Network generator_;
};

/// AE-only baseline: decode(encode(partial)) with the clean autoencoder.
std::vector<PointSet> autoencoder_baseline(Autoencoder& clean_ae, std::span<const PointSet> partials);

nn::Checkpoint to_checkpoint(const TrainedGan& gan, std::uint64_t seed);
TrainedGan gan_from_checkpoint(const nn::Checkpoint& ckpt);

}  // namespace upcc
