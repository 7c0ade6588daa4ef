#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "upcc/nn/layers.hpp"
#include "upcc/nn/tensor.hpp"
#include "upcc/rng.hpp"

namespace upcc::nn {

/// Ordered stack of layers whose trainable parameters live in one flat
/// buffer (and gradients in a parallel one), so optimizers and checkpoints
/// see a single vector.
class Network {
 public:
  Network() = default;
  Network(std::vector<LayerSpec> specs, Rng& rng);

  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  /// Runs every layer in the current mode. In Train mode batchnorm layers
  /// update their running statistics. Throws NumericError naming the first
  /// layer that produces a non-finite value.
  Tensor forward(const Tensor& x);
  /// Back-propagates `upstream` (gradient of a scalar loss with respect to
  /// the last forward output). Parameter gradients are accumulated; the
  /// gradient with respect to the input is returned. Requires a preceding
  /// forward and consumes it.
  Tensor backward(const Tensor& upstream);

  void zero_grad();

  Mode mode() const { return mode_; }
  void set_mode(Mode mode) { mode_ = mode; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::span<double> grads() { return grads_; }
  std::span<const double> grads() const { return grads_; }
  std::size_t param_count() const { return params_.size(); }

  /// Concatenated batchnorm running statistics.
  std::vector<double> state() const;
  void set_state(std::span<const double> state);

  const std::vector<LayerSpec>& specs() const { return specs_; }
  std::size_t layer_count() const { return layers_.size(); }
  std::size_t input_features() const;
  std::size_t output_features() const;

  /// Canonical one-line description of the layer stack and its hash.
  std::string architecture() const;
  std::uint64_t architecture_hash() const;

  /// True if the last forward passed through a nondifferentiable point.
  bool last_forward_nondifferentiable() const;

 private:
  void build_layers();

  std::vector<LayerSpec> specs_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<double> params_;
  std::vector<double> grads_;
  Mode mode_ = Mode::Train;
  bool has_forward_ = false;
};

/// Layer specs for a dense MLP: ReLU after every hidden layer, none after
/// the last. Hidden layers use Kaiming init, the output layer Xavier.
std::vector<LayerSpec> mlp_specs(std::size_t in, std::span<const std::size_t> widths);

/// Per-point stack: each width is SharedMlp(no bias) -> BatchNorm -> ReLU,
/// followed by a feature-wise max over points.
std::vector<LayerSpec> pointnet_specs(std::size_t in, std::span<const std::size_t> widths);

}  // namespace upcc::nn
