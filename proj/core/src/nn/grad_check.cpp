#include "upcc/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "upcc/error.hpp"

namespace upcc::nn {

GradCheckResult check_gradients(std::span<double> params, std::span<const double> analytic,
                                const std::function<double()>& evaluate,
                                const GradCheckOptions& options) {
  if (params.size() != analytic.size()) throw InvalidArgument("grad check: length mismatch");
  GradCheckResult result;
  const std::size_t n = params.size();
  const std::size_t stride =
      (options.max_params == 0 || options.max_params >= n) ? 1 : (n + options.max_params - 1) / options.max_params;
  for (std::size_t i = 0; i < n; i += stride) {
    const double saved = params[i];
    params[i] = saved + options.step;
    const double up = evaluate();
    params[i] = saved - options.step;
    const double down = evaluate();
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * options.step);
    const double a = analytic[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
    const double rel = std::abs(a - numeric) / denom;
    ++result.checked;
    if (rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_index = i;
      result.worst_analytic = a;
      result.worst_numeric = numeric;
    }
  }
  return result;
}

GradCheckResult grad_check(Network& net, const LossFn& loss, const Tensor& x,
                           const GradCheckOptions& options) {
  const auto saved_state = net.state();
  Tensor grad_out;
  net.zero_grad();
  const Tensor out = net.forward(x);
  if (net.last_forward_nondifferentiable()) {
    net.set_state(saved_state);
    GradCheckResult skipped;
    skipped.skipped = true;
    skipped.reason = "skipped (nondifferentiable point): max-pool tie";
    return skipped;
  }
  loss(out, grad_out);
  net.backward(grad_out);
  const std::vector<double> analytic(net.grads().begin(), net.grads().end());
  auto evaluate = [&] {
    net.set_state(saved_state);
    Tensor g;
    return loss(net.forward(x), g);
  };
  auto result = check_gradients(net.params(), analytic, evaluate, options);
  net.set_state(saved_state);
  return result;
}

}  // namespace upcc::nn
