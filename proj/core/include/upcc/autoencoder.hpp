#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "upcc/nn/adam.hpp"
#include "upcc/nn/checkpoint.hpp"
#include "upcc/nn/network.hpp"
#include "upcc/point_set.hpp"

namespace upcc {

/// Shape of a point-set autoencoder: a per-point encoder lifted through
/// `encoder_widths` and then to k features, max-pooled into a latent code,
/// and a fully connected decoder through `decoder_widths` to n * 3 outputs.
struct AutoencoderSpec {
  std::size_t n = 128;
  std::size_t k = 16;
  std::vector<std::size_t> encoder_widths{64, 128, 128, 256};
  std::vector<std::size_t> decoder_widths{256, 256};

  static AutoencoderSpec paper_scale() { return {2048, 128, {64, 128, 128, 256}, {256, 256}}; }
  static AutoencoderSpec desk_scale(std::size_t n = 128, std::size_t k = 16) {
    return {n, k, {64, 128, 128, 256}, {256, 256}};
  }

  void validate() const;
};

struct LatentCode {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const LatentCode&, const LatentCode&) = default;
};

class Autoencoder {
 public:
  Autoencoder(AutoencoderSpec spec, Rng& rng);
  Autoencoder(AutoencoderSpec spec, nn::Network encoder, nn::Network decoder);

  const AutoencoderSpec& spec() const { return spec_; }
  nn::Network& encoder() { return encoder_; }
  nn::Network& decoder() { return decoder_; }
  const nn::Network& encoder() const { return encoder_; }
  const nn::Network& decoder() const { return decoder_; }

  /// Switches both networks. Infer mode makes encode a pure, exactly
  /// permutation-invariant function of the input set.
  void set_mode(nn::Mode mode);

  LatentCode encode(const PointSet& set);
  std::vector<LatentCode> encode(std::span<const PointSet> sets);
  PointSet decode(const LatentCode& z);
  std::vector<PointSet> decode(std::span<const LatentCode> codes);
  PointSet reconstruct(const PointSet& set) { return decode(encode(set)); }

  /// Mean EMD between each input and its reconstruction.
  double loss(std::span<const PointSet> batch);

  /// One optimizer step on `batch`; returns the batch loss before the step.
  double train_step(std::span<const PointSet> batch, nn::AdamState& encoder_opt,
                    nn::AdamState& decoder_opt);

 private:
  nn::Tensor points_tensor(std::span<const PointSet> sets) const;

  AutoencoderSpec spec_;
  nn::Network encoder_;
  nn::Network decoder_;
};

/// (batch, 1, k) tensor of codes and the inverse.
nn::Tensor codes_tensor(std::span<const LatentCode> codes);
std::vector<LatentCode> codes_from_tensor(const nn::Tensor& t);
/// (batch, 1, 3n) decoder output as point sets.
std::vector<PointSet> clouds_from_tensor(const nn::Tensor& t);

struct AeTrainConfig {
  nn::AdamConfig adam{0.0005, 0.9, 0.999, 1e-8};
  std::size_t batch_size = 200;
  std::size_t epochs = 2000;
  std::uint64_t seed = 42;
  /// Learning rate multiplier applied after every epoch.
  double lr_decay = 1.0;

  /// lr 0.0005, beta1 0.9, batch 200, 2000 epochs.
  static AeTrainConfig paper() { return {}; }
  /// lr 0.005 decayed by 0.99 per epoch, batch 20, 300 epochs.
  static AeTrainConfig desk() { return {{0.005, 0.9, 0.999, 1e-8}, 20, 300, 42, 0.99}; }
  static AeTrainConfig preset(const std::string& name);
};

struct TrainedAutoencoder {
  Autoencoder ae;
  std::vector<double> loss_curve;  // mean training loss per epoch
  nn::AdamState encoder_opt;
  nn::AdamState decoder_opt;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Trains from scratch on clouds of spec.n points. Throws NumericError if
/// the loss becomes non-finite. The returned autoencoder is in infer mode.
TrainedAutoencoder train_ae(std::span<const PointSet> dataset, const AutoencoderSpec& spec,
                            const AeTrainConfig& cfg, const EpochCallback& on_epoch = {});

nn::Checkpoint to_checkpoint(const TrainedAutoencoder& trained, std::uint64_t seed);
Autoencoder autoencoder_from_checkpoint(const nn::Checkpoint& ckpt);

}  // namespace upcc
