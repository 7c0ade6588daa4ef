#include "upcc/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "upcc/error.hpp"

namespace upcc::nn {

std::string Tensor::shape_string() const {
  std::ostringstream ss;
  ss << '(' << batch << ", " << points << ", " << features << ')';
  return ss.str();
}

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Dense: return "dense";
    case LayerKind::SharedMlp: return "shared_mlp";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool: return "maxpool";
  }
  return "unknown";
}

std::string LayerSpec::describe() const {
  std::ostringstream ss;
  ss << to_string(kind);
  if (kind == LayerKind::Dense || kind == LayerKind::SharedMlp) {
    ss << '(' << in << "->" << out << (bias ? "" : ",nobias") << ')';
  } else if (kind == LayerKind::BatchNorm) {
    ss << '(' << in << ')';
  }
  return ss.str();
}

namespace {

void require(bool ok, const LayerSpec& spec, const Tensor& x, const char* what) {
  if (!ok) {
    throw InvalidArgument(spec.describe() + ": " + what + ", got input shape " +
                          x.shape_string());
  }
}

class Linear final : public Layer {
 public:
  explicit Linear(const LayerSpec& spec) : Layer(spec) {}

  std::size_t param_count() const override {
    return spec_.in * spec_.out + (spec_.bias ? spec_.out : 0);
  }

  void bind(std::span<double> params, std::span<double> grads) override {
    const std::size_t nw = spec_.in * spec_.out;
    w_ = params.subspan(0, nw);
    gw_ = grads.subspan(0, nw);
    if (spec_.bias) {
      b_ = params.subspan(nw, spec_.out);
      gb_ = grads.subspan(nw, spec_.out);
    }
  }

  void initialize(Rng& rng) override {
    const double fan_in = static_cast<double>(spec_.in);
    const double fan_out = static_cast<double>(spec_.out);
    switch (spec_.init) {
      case Init::KaimingUniform: {
        const double bound = std::sqrt(6.0 / fan_in);
        for (auto& w : w_) w = rng.uniform(-bound, bound);
        break;
      }
      case Init::XavierUniform: {
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& w : w_) w = rng.uniform(-bound, bound);
        break;
      }
      case Init::Identity:
        std::fill(w_.begin(), w_.end(), 0.0);
        for (std::size_t i = 0; i < std::min(spec_.in, spec_.out); ++i) {
          w_[i * spec_.out + i] = 1.0;
        }
        break;
      case Init::Zero:
        std::fill(w_.begin(), w_.end(), 0.0);
        break;
    }
    std::fill(b_.begin(), b_.end(), 0.0);
  }

  Tensor forward(const Tensor& x, Mode) override {
    require(x.features == spec_.in, spec_, x, "feature width mismatch");
    if (spec_.kind == LayerKind::Dense) {
      require(x.points == 1, spec_, x, "dense layer expects one row per batch item");
    }
    input_ = x;
    const std::size_t in = spec_.in, out = spec_.out, rows = x.rows();
    Tensor y(x.batch, x.points, out);
    // Every output element accumulates bias then inputs in ascending order,
    // whatever block its row falls in, so a row's result never depends on
    // its neighbours.
    std::size_t r = 0;
    for (; r + 4 <= rows; r += 4) {
      const double* x0 = x.data.data() + r * in;
      const double* x1 = x0 + in;
      const double* x2 = x1 + in;
      const double* x3 = x2 + in;
      double* __restrict y0 = y.data.data() + r * out;
      double* __restrict y1 = y0 + out;
      double* __restrict y2 = y1 + out;
      double* __restrict y3 = y2 + out;
      if (spec_.bias) {
        for (double* yr : {y0, y1, y2, y3}) std::copy(b_.begin(), b_.end(), yr);
      }
      for (std::size_t i = 0; i < in; ++i) {
        const double a0 = x0[i], a1 = x1[i], a2 = x2[i], a3 = x3[i];
        const double* __restrict wi = w_.data() + i * out;
        for (std::size_t o = 0; o < out; ++o) {
          const double w = wi[o];
          y0[o] += a0 * w;
          y1[o] += a1 * w;
          y2[o] += a2 * w;
          y3[o] += a3 * w;
        }
      }
    }
    for (; r < rows; ++r) {
      const double* xr = x.data.data() + r * in;
      double* yr = y.data.data() + r * out;
      if (spec_.bias) std::copy(b_.begin(), b_.end(), yr);
      for (std::size_t i = 0; i < in; ++i) {
        const double xi = xr[i];
        const double* wi = w_.data() + i * out;
        for (std::size_t o = 0; o < out; ++o) yr[o] += xi * wi[o];
      }
    }
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    const std::size_t in = spec_.in, out = spec_.out, rows = input_.rows();
    Tensor dx(input_.batch, input_.points, in);
    // dx = dy * W^T, computed as row updates against a transposed copy.
    wt_.resize(in * out);
    for (std::size_t i = 0; i < in; ++i) {
      for (std::size_t o = 0; o < out; ++o) wt_[o * in + i] = w_[i * out + o];
    }
    std::size_t r = 0;
    for (; r + 4 <= rows; r += 4) {
      const double* d0 = dy.data.data() + r * out;
      const double* d1 = d0 + out;
      const double* d2 = d1 + out;
      const double* d3 = d2 + out;
      double* __restrict x0 = dx.data.data() + r * in;
      double* __restrict x1 = x0 + in;
      double* __restrict x2 = x1 + in;
      double* __restrict x3 = x2 + in;
      for (std::size_t o = 0; o < out; ++o) {
        const double g0 = d0[o], g1 = d1[o], g2 = d2[o], g3 = d3[o];
        if (g0 == 0.0 && g1 == 0.0 && g2 == 0.0 && g3 == 0.0) continue;
        const double* __restrict wo = wt_.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) {
          const double w = wo[i];
          x0[i] += g0 * w;
          x1[i] += g1 * w;
          x2[i] += g2 * w;
          x3[i] += g3 * w;
        }
      }
    }
    for (; r < rows; ++r) {
      const double* dyr = dy.data.data() + r * out;
      double* __restrict dxr = dx.data.data() + r * in;
      for (std::size_t o = 0; o < out; ++o) {
        const double g = dyr[o];
        if (g == 0.0) continue;
        const double* __restrict wo = wt_.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wo[i];
      }
    }
    // dW += x^T dy, four rows at a time.
    r = 0;
    for (; r + 4 <= rows; r += 4) {
      const double* x0 = input_.data.data() + r * in;
      const double* x1 = x0 + in;
      const double* x2 = x1 + in;
      const double* x3 = x2 + in;
      const double* d0 = dy.data.data() + r * out;
      const double* d1 = d0 + out;
      const double* d2 = d1 + out;
      const double* d3 = d2 + out;
      for (std::size_t i = 0; i < in; ++i) {
        const double a0 = x0[i], a1 = x1[i], a2 = x2[i], a3 = x3[i];
        double* __restrict gwi = gw_.data() + i * out;
        for (std::size_t o = 0; o < out; ++o) {
          gwi[o] += a0 * d0[o] + a1 * d1[o] + a2 * d2[o] + a3 * d3[o];
        }
      }
    }
    for (; r < rows; ++r) {
      const double* xr = input_.data.data() + r * in;
      const double* dyr = dy.data.data() + r * out;
      for (std::size_t i = 0; i < in; ++i) {
        const double xi = xr[i];
        double* gwi = gw_.data() + i * out;
        for (std::size_t o = 0; o < out; ++o) gwi[o] += xi * dyr[o];
      }
    }
    if (spec_.bias) {
      for (std::size_t r2 = 0; r2 < rows; ++r2) {
        const double* dyr = dy.data.data() + r2 * out;
        for (std::size_t o = 0; o < out; ++o) gb_[o] += dyr[o];
      }
    }
    return dx;
  }

 private:
  std::span<double> w_, b_, gw_, gb_;
  std::vector<double> wt_;
  Tensor input_;
};

class BatchNorm final : public Layer {
 public:
  explicit BatchNorm(const LayerSpec& spec)
      : Layer(spec), running_(2 * spec.in, 0.0) {
    std::fill(running_.begin() + static_cast<std::ptrdiff_t>(spec.in), running_.end(), 1.0);
  }

  std::size_t param_count() const override { return 2 * spec_.in; }

  void bind(std::span<double> params, std::span<double> grads) override {
    gamma_ = params.subspan(0, spec_.in);
    beta_ = params.subspan(spec_.in, spec_.in);
    ggamma_ = grads.subspan(0, spec_.in);
    gbeta_ = grads.subspan(spec_.in, spec_.in);
  }

  void initialize(Rng&) override {
    std::fill(gamma_.begin(), gamma_.end(), 1.0);
    std::fill(beta_.begin(), beta_.end(), 0.0);
  }

  std::span<double> state() override { return running_; }

  Tensor forward(const Tensor& x, Mode mode) override {
    require(x.features == spec_.in, spec_, x, "feature width mismatch");
    const std::size_t f = spec_.in, rows = x.rows();
    require(rows > 0, spec_, x, "empty batch");
    train_ = mode == Mode::Train;
    std::span<double> running_mean(running_.data(), f);
    std::span<double> running_var(running_.data() + f, f);
    std::vector<double> mean(f, 0.0), var(f, 0.0);
    if (train_) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < f; ++j) mean[j] += x.data[r * f + j];
      }
      for (auto& m : mean) m /= static_cast<double>(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < f; ++j) {
          const double d = x.data[r * f + j] - mean[j];
          var[j] += d * d;
        }
      }
      for (auto& v : var) v /= static_cast<double>(rows);
      for (std::size_t j = 0; j < f; ++j) {
        running_mean[j] = kBatchNormMomentum * running_mean[j] + (1.0 - kBatchNormMomentum) * mean[j];
        running_var[j] = kBatchNormMomentum * running_var[j] + (1.0 - kBatchNormMomentum) * var[j];
      }
    } else {
      std::copy(running_mean.begin(), running_mean.end(), mean.begin());
      std::copy(running_var.begin(), running_var.end(), var.begin());
    }
    inv_std_.resize(f);
    for (std::size_t j = 0; j < f; ++j) inv_std_[j] = 1.0 / std::sqrt(var[j] + kBatchNormEpsilon);
    xhat_ = Tensor(x.batch, x.points, f);
    Tensor y(x.batch, x.points, f);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < f; ++j) {
        const double xh = (x.data[r * f + j] - mean[j]) * inv_std_[j];
        xhat_.data[r * f + j] = xh;
        y.data[r * f + j] = gamma_[j] * xh + beta_[j];
      }
    }
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    const std::size_t f = spec_.in, rows = xhat_.rows();
    Tensor dx(xhat_.batch, xhat_.points, f);
    std::vector<double> sum_dy(f, 0.0), sum_dy_xhat(f, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < f; ++j) {
        sum_dy[j] += dy.data[r * f + j];
        sum_dy_xhat[j] += dy.data[r * f + j] * xhat_.data[r * f + j];
      }
    }
    for (std::size_t j = 0; j < f; ++j) {
      ggamma_[j] += sum_dy_xhat[j];
      gbeta_[j] += sum_dy[j];
    }
    const double n = static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < f; ++j) {
        const double g = dy.data[r * f + j];
        if (train_) {
          dx.data[r * f + j] = gamma_[j] * inv_std_[j] / n *
                               (n * g - sum_dy[j] - xhat_.data[r * f + j] * sum_dy_xhat[j]);
        } else {
          dx.data[r * f + j] = g * gamma_[j] * inv_std_[j];
        }
      }
    }
    return dx;
  }

 private:
  std::span<double> gamma_, beta_, ggamma_, gbeta_;
  std::vector<double> running_;  // mean then variance
  std::vector<double> inv_std_;
  Tensor xhat_;
  bool train_ = true;
};

class Relu final : public Layer {
 public:
  explicit Relu(const LayerSpec& spec) : Layer(spec) {}

  Tensor forward(const Tensor& x, Mode) override {
    Tensor y = x;
    mask_.assign(x.size(), 0);
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y.data[i] > 0.0) {
        mask_[i] = 1;
      } else {
        y.data[i] = 0.0;
      }
    }
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (!mask_[i]) dx.data[i] = 0.0;
    }
    return dx;
  }

 private:
  std::vector<char> mask_;
};

class MaxPool final : public Layer {
 public:
  explicit MaxPool(const LayerSpec& spec) : Layer(spec) {}

  Tensor forward(const Tensor& x, Mode) override {
    require(x.points >= 1, spec_, x, "no points to pool");
    in_points_ = x.points;
    const std::size_t f = x.features;
    Tensor y(x.batch, 1, f);
    argmax_.assign(x.batch * f, 0);
    tie_ = false;
    for (std::size_t b = 0; b < x.batch; ++b) {
      for (std::size_t j = 0; j < f; ++j) {
        std::size_t best = 0;
        double v = x.at(b, 0, j);
        for (std::size_t p = 1; p < x.points; ++p) {
          if (x.at(b, p, j) > v) {
            v = x.at(b, p, j);
            best = p;
          }
        }
        y.at(b, 0, j) = v;
        argmax_[b * f + j] = best;
        // A tie between points whose feature rows differ is a kink of the
        // pooled output in the parameters. Exact zeros are left out: they are
        // clamped ReLU outputs, locally constant. Rows that are identical
        // (duplicated input points) stay tied under any perturbation.
        if (v != 0.0 && !tie_) {
          for (std::size_t p = best + 1; p < x.points; ++p) {
            if (x.at(b, p, j) == v && !same_row(x, b, best, p)) {
              tie_ = true;
              break;
            }
          }
        }
      }
    }
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    const std::size_t f = dy.features;
    Tensor dx(dy.batch, in_points_, f);
    for (std::size_t b = 0; b < dy.batch; ++b) {
      for (std::size_t j = 0; j < f; ++j) dx.at(b, argmax_[b * f + j], j) = dy.at(b, 0, j);
    }
    return dx;
  }

  bool at_nondifferentiable_point() const override { return tie_; }

 private:
  static bool same_row(const Tensor& x, std::size_t b, std::size_t p, std::size_t q) {
    for (std::size_t j = 0; j < x.features; ++j) {
      if (x.at(b, p, j) != x.at(b, q, j)) return false;
    }
    return true;
  }

  std::size_t in_points_ = 0;
  std::vector<std::size_t> argmax_;
  bool tie_ = false;
};

}  // namespace

std::unique_ptr<Layer> make_layer(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::Dense:
    case LayerKind::SharedMlp:
      if (spec.in == 0 || spec.out == 0) throw InvalidArgument("linear layer widths must be positive");
      return std::make_unique<Linear>(spec);
    case LayerKind::BatchNorm:
      if (spec.in == 0) throw InvalidArgument("batchnorm width must be positive");
      return std::make_unique<BatchNorm>(spec);
    case LayerKind::Relu:
      return std::make_unique<Relu>(spec);
    case LayerKind::MaxPool:
      return std::make_unique<MaxPool>(spec);
  }
  throw InvalidArgument("unknown layer kind");
}

}  // namespace upcc::nn
