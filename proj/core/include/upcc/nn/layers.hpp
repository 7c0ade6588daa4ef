#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "upcc/nn/tensor.hpp"
#include "upcc/rng.hpp"

namespace upcc::nn {

enum class Mode { Train, Infer };

enum class LayerKind {
  Dense,      // fully connected on (batch, 1, in)
  SharedMlp,  // the same dense map applied to every point of (batch, points, in)
  BatchNorm,  // per-feature normalization over all batch * points rows
  Relu,
  MaxPool,    // feature-wise maximum over the points axis
};

enum class Init { KaimingUniform, XavierUniform, Identity, Zero };

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  std::size_t in = 0;
  std::size_t out = 0;
  bool bias = true;
  Init init = Init::KaimingUniform;

  std::string describe() const;
};

std::string to_string(LayerKind kind);

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

/// One differentiable stage. forward caches what backward needs; backward
/// accumulates into the bound gradient buffer and returns the gradient with
/// respect to the layer input.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& x, Mode mode) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;

  virtual std::size_t param_count() const { return 0; }
  virtual void bind(std::span<double> /*params*/, std::span<double> /*grads*/) {}
  virtual void initialize(Rng& /*rng*/) {}

  /// Non-trainable persistent state (batchnorm running statistics).
  virtual std::span<double> state() { return {}; }

  /// True when the last forward hit a point where the layer is not
  /// differentiable in its parameters.
  virtual bool at_nondifferentiable_point() const { return false; }

  const LayerSpec& spec() const { return spec_; }

 protected:
  explicit Layer(LayerSpec spec) : spec_(spec) {}
  LayerSpec spec_;
};

std::unique_ptr<Layer> make_layer(const LayerSpec& spec);

}  // namespace upcc::nn
