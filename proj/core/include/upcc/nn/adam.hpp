#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace upcc::nn {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;

  AdamState() = default;
  AdamState(AdamConfig cfg, std::size_t n) : config(cfg), m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update. Throws NumericError on a non-finite gradient
/// (parameters are left untouched in that case).
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

}  // namespace upcc::nn
