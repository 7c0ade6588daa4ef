#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "upcc/nn/network.hpp"
#include "upcc/nn/tensor.hpp"

namespace upcc::nn {

struct GradCheckOptions {
  double step = 1e-6;
  /// Denominator floor in |a - n| / max(|a|, |n|, floor).
  double floor = 1e-12;
  /// Check at most this many parameters, evenly strided; 0 checks all.
  std::size_t max_params = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  bool skipped = false;
  std::string reason;
};

/// Compares analytic gradients with central finite differences of
/// `evaluate`, which must recompute the scalar loss from the current
/// contents of `params`. Each parameter is restored after probing.
GradCheckResult check_gradients(std::span<double> params, std::span<const double> analytic,
                                const std::function<double()>& evaluate,
                                const GradCheckOptions& options = {});

/// Loss on a network output: returns the scalar and writes dL/dout.
using LossFn = std::function<double(const Tensor& out, Tensor& grad_out)>;

/// Gradient check of every parameter of `net` for loss(net(x)). Batchnorm
/// running statistics are restored afterwards. Reports skipped if the
/// forward pass sits on a max-pool tie.
GradCheckResult grad_check(Network& net, const LossFn& loss, const Tensor& x,
                           const GradCheckOptions& options = {});

}  // namespace upcc::nn
