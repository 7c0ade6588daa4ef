#include "upcc/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "upcc/error.hpp"
#include "upcc/hash.hpp"

namespace upcc::nn {

Network::Network(std::vector<LayerSpec> specs, Rng& rng) : specs_(std::move(specs)) {
  build_layers();
  for (auto& layer : layers_) layer->initialize(rng);
}

Network::Network(const Network& other) : specs_(other.specs_), mode_(other.mode_) {
  build_layers();
  std::copy(other.params_.begin(), other.params_.end(), params_.begin());
  set_state(other.state());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void Network::build_layers() {
  layers_.clear();
  std::size_t total = 0;
  for (const auto& spec : specs_) {
    layers_.push_back(make_layer(spec));
    total += layers_.back()->param_count();
  }
  params_.assign(total, 0.0);
  grads_.assign(total, 0.0);
  std::size_t offset = 0;
  for (auto& layer : layers_) {
    const std::size_t n = layer->param_count();
    layer->bind(std::span<double>(params_).subspan(offset, n),
                std::span<double>(grads_).subspan(offset, n));
    offset += n;
  }
  has_forward_ = false;
}

Tensor Network::forward(const Tensor& x) {
  if (layers_.empty()) throw InvalidArgument("forward on an empty network");
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i]->forward(h, mode_);
    for (double v : h.data) {
      if (!std::isfinite(v)) {
        has_forward_ = false;
        throw NumericError("non-finite activation in layer " + std::to_string(i) + " (" +
                           specs_[i].describe() + ")");
      }
    }
  }
  has_forward_ = true;
  return h;
}

Tensor Network::backward(const Tensor& upstream) {
  if (!has_forward_) throw InvalidArgument("backward called without a preceding forward");
  has_forward_ = false;
  Tensor g = upstream;
  for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g);
  return g;
}

void Network::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

std::vector<double> Network::state() const {
  std::vector<double> out;
  for (const auto& layer : layers_) {
    auto s = layer->state();
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

void Network::set_state(std::span<const double> state) {
  std::size_t offset = 0;
  for (auto& layer : layers_) {
    auto s = layer->state();
    if (offset + s.size() > state.size()) throw InvalidArgument("network state too short");
    std::copy_n(state.begin() + static_cast<std::ptrdiff_t>(offset), s.size(), s.begin());
    offset += s.size();
  }
  if (offset != state.size()) throw InvalidArgument("network state length mismatch");
}

std::size_t Network::input_features() const {
  for (const auto& s : specs_) {
    if (s.in != 0) return s.in;
  }
  return 0;
}

std::size_t Network::output_features() const {
  for (auto it = specs_.rbegin(); it != specs_.rend(); ++it) {
    if (it->kind == LayerKind::Dense || it->kind == LayerKind::SharedMlp) return it->out;
    if (it->kind == LayerKind::BatchNorm) return it->in;
  }
  return 0;
}

std::string Network::architecture() const {
  std::ostringstream ss;
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (i) ss << ' ';
    ss << specs_[i].describe();
  }
  return ss.str();
}

std::uint64_t Network::architecture_hash() const { return fnv1a64(architecture()); }

bool Network::last_forward_nondifferentiable() const {
  return std::any_of(layers_.begin(), layers_.end(),
                     [](const auto& l) { return l->at_nondifferentiable_point(); });
}

std::vector<LayerSpec> mlp_specs(std::size_t in, std::span<const std::size_t> widths) {
  std::vector<LayerSpec> specs;
  std::size_t prev = in;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const bool last = i + 1 == widths.size();
    specs.push_back({LayerKind::Dense, prev, widths[i], true,
                     last ? Init::XavierUniform : Init::KaimingUniform});
    if (!last) specs.push_back({LayerKind::Relu});
    prev = widths[i];
  }
  return specs;
}

std::vector<LayerSpec> pointnet_specs(std::size_t in, std::span<const std::size_t> widths) {
  std::vector<LayerSpec> specs;
  std::size_t prev = in;
  for (std::size_t w : widths) {
    specs.push_back({LayerKind::SharedMlp, prev, w, false, Init::KaimingUniform});
    specs.push_back({LayerKind::BatchNorm, w, 0});
    specs.push_back({LayerKind::Relu});
    prev = w;
  }
  specs.push_back({LayerKind::MaxPool});
  return specs;
}

}  // namespace upcc::nn
