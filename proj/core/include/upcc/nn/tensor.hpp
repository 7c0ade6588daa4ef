#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace upcc::nn {

/// Dense row-major activation of shape (batch, points, features). Layers act
/// on the trailing feature axis, so a tensor is also viewed as a matrix of
/// batch * points rows. Gradients flowing backward use the same type.
struct Tensor {
  std::size_t batch = 0;
  std::size_t points = 0;
  std::size_t features = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t b, std::size_t p, std::size_t f, double fill = 0.0)
      : batch(b), points(p), features(f), data(b * p * f, fill) {}

  std::size_t rows() const { return batch * points; }
  std::size_t size() const { return data.size(); }

  double& at(std::size_t b, std::size_t p, std::size_t f) {
    return data[(b * points + p) * features + f];
  }
  double at(std::size_t b, std::size_t p, std::size_t f) const {
    return data[(b * points + p) * features + f];
  }
  std::span<double> row(std::size_t r) { return {data.data() + r * features, features}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * features, features};
  }

  bool same_shape(const Tensor& o) const {
    return batch == o.batch && points == o.points && features == o.features;
  }
  std::string shape_string() const;
};

}  // namespace upcc::nn
