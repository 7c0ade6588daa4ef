#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "upcc/error.hpp"
#include "upcc/nn/adam.hpp"
#include "upcc/nn/checkpoint.hpp"
#include "upcc/nn/grad_check.hpp"
#include "upcc/nn/network.hpp"
#include "upcc/rng.hpp"

using namespace upcc;
using namespace upcc::nn;

namespace {

Tensor random_tensor(std::size_t b, std::size_t p, std::size_t f, Rng& rng) {
  Tensor t(b, p, f);
  for (auto& v : t.data) v = rng.uniform(-1, 1);
  return t;
}

// Fixed random projection of the output, so every output element matters.
LossFn projection_loss(std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> w(size);
  for (auto& v : w) v = rng.uniform(-1, 1);
  return [w](const Tensor& out, Tensor& grad) {
    grad = Tensor(out.batch, out.points, out.features);
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      s += w[i] * out.data[i] + 0.5 * out.data[i] * out.data[i];
      grad.data[i] = w[i] + out.data[i];
    }
    return s;
  };
}

}  // namespace

TEST(Layers, MaxPoolExample) {
  Rng rng(0);
  Network net({{LayerKind::MaxPool, 2, 2}}, rng);
  Tensor x(1, 2, 2);
  x.data = {1, 5, 3, 2};
  const auto y = net.forward(x);
  EXPECT_EQ(y.points, 1u);
  EXPECT_EQ(y.data, (std::vector<double>{3, 5}));
}

TEST(Layers, ReluExample) {
  Rng rng(0);
  Network net({{LayerKind::Relu, 2, 2}}, rng);
  Tensor x(1, 1, 2);
  x.data = {-1, 2};
  EXPECT_EQ(net.forward(x).data, (std::vector<double>{0, 2}));
}

TEST(Layers, IdentityDense) {
  Rng rng(0);
  Network net({{LayerKind::Dense, 4, 4, true, Init::Identity}}, rng);
  Tensor x = random_tensor(3, 1, 4, rng);
  EXPECT_EQ(net.forward(x).data, x.data);
}

TEST(Layers, ShapeMismatchAndBackwardWithoutForward) {
  Rng rng(0);
  Network net(mlp_specs(3, std::vector<std::size_t>{4, 2}), rng);
  EXPECT_THROW(net.forward(Tensor(1, 1, 5)), InvalidArgument);
  EXPECT_THROW(net.backward(Tensor(1, 1, 2)), InvalidArgument);
  Network dense({{LayerKind::Dense, 3, 2}}, rng);
  EXPECT_THROW(dense.forward(Tensor(1, 4, 3)), InvalidArgument);
}

TEST(Layers, NonFiniteActivationNamesLayer) {
  Rng rng(0);
  Network net(mlp_specs(2, std::vector<std::size_t>{3, 1}), rng);
  Tensor x(1, 1, 2);
  x.data = {1e308, 1e308};
  for (auto& p : net.params()) p = 1e308;
  try {
    net.forward(x);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos) << e.what();
  }
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  Rng rng(1);
  Network net(pointnet_specs(3, std::vector<std::size_t>{8, 4}), rng);
  const Tensor x = random_tensor(2, 5, 3, rng);
  const Tensor y = net.forward(x);
  net.zero_grad();
  net.backward(Tensor(y.batch, y.points, y.features));
  for (double g : net.grads()) EXPECT_EQ(g, 0.0);
}

TEST(Backward, DenseSumLossGivesInputPattern) {
  Rng rng(2);
  Network net({{LayerKind::Dense, 3, 2, false}}, rng);
  Tensor x(1, 1, 3);
  x.data = {0.5, -2, 3};
  net.forward(x);
  net.zero_grad();
  net.backward(Tensor(1, 1, 2, 1.0));
  // W is stored input-major: W[i][o].
  const std::vector<double> expect = {0.5, 0.5, -2, -2, 3, 3};
  EXPECT_EQ(std::vector<double>(net.grads().begin(), net.grads().end()), expect);
}

TEST(GradCheck, LinearQuadraticIsExact) {
  Rng rng(3);
  Network net({{LayerKind::Dense, 4, 3}}, rng);
  const auto r = grad_check(net, projection_loss(6, 1), random_tensor(2, 1, 4, rng));
  EXPECT_FALSE(r.skipped);
  EXPECT_LT(r.max_relative_error, 1e-8);
}

TEST(GradCheck, EachLayerType) {
  Rng rng(4);
  struct Case {
    const char* name;
    std::vector<LayerSpec> specs;
    Tensor x;
  };
  std::vector<Case> cases;
  cases.push_back({"dense", {{LayerKind::Dense, 5, 4}}, random_tensor(3, 1, 5, rng)});
  cases.push_back({"shared_mlp", {{LayerKind::SharedMlp, 3, 6}}, random_tensor(2, 7, 3, rng)});
  cases.push_back({"batchnorm",
                   {{LayerKind::SharedMlp, 3, 4, false}, {LayerKind::BatchNorm, 4, 4}},
                   random_tensor(2, 6, 3, rng)});
  cases.push_back({"relu", {{LayerKind::Dense, 4, 6}, {LayerKind::Relu, 6, 6}}, random_tensor(3, 1, 4, rng)});
  cases.push_back({"maxpool",
                   {{LayerKind::SharedMlp, 3, 5}, {LayerKind::MaxPool, 5, 5}},
                   random_tensor(2, 9, 3, rng)});
  for (auto& c : cases) {
    Network net(c.specs, rng);
    const std::size_t out = net.forward(c.x).size();
    const auto r = grad_check(net, projection_loss(out, 5), c.x);
    EXPECT_FALSE(r.skipped) << c.name << ": " << r.reason;
    EXPECT_LT(r.max_relative_error, 1e-4) << c.name << " worst " << r.worst_analytic << " vs " << r.worst_numeric;
  }
}

TEST(GradCheck, FullEncoderStack) {
  Rng rng(6);
  Network net(pointnet_specs(3, std::vector<std::size_t>{16, 16, 8}), rng);
  const Tensor x = random_tensor(3, 12, 3, rng);
  const auto r = grad_check(net, projection_loss(24, 7), x);
  EXPECT_FALSE(r.skipped) << r.reason;
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(GradCheck, MaxPoolTieIsSkipped) {
  Rng rng(7);
  Network net({{LayerKind::SharedMlp, 2, 3}, {LayerKind::MaxPool, 3, 3}}, rng);
  // Feature 0 = x0 + 1 peaks at points 0 and 2; feature 1 = x1 tells
  // those two rows apart, so the shared maximum is a genuine tie.
  for (auto& p : net.params()) p = 0.0;
  net.params()[0] = 1.0;
  net.params()[4] = 1.0;
  net.params()[6] = 1.0;
  Tensor x(1, 3, 2);
  x.data = {0.5, 0.2, 0.1, -0.3, 0.5, 0.9};
  const auto r = grad_check(net, projection_loss(3, 8), x);
  EXPECT_TRUE(r.skipped);
  EXPECT_EQ(r.reason, "skipped (nondifferentiable point): max-pool tie");
}

TEST(Invariance, MaxPoolNetworkIsPermutationInvariant) {
  Rng rng(8);
  Network net(pointnet_specs(3, std::vector<std::size_t>{16, 8}), rng);
  net.set_mode(Mode::Infer);
  Tensor x = random_tensor(1, 33, 3, rng);
  const auto y = net.forward(x);
  std::vector<std::size_t> order(33);
  std::iota(order.begin(), order.end(), 0);
  for (int trial = 0; trial < 20; ++trial) {
    rng.shuffle(order.begin(), order.end());
    Tensor xp(1, 33, 3);
    for (std::size_t p = 0; p < 33; ++p) {
      for (std::size_t f = 0; f < 3; ++f) xp.data[p * 3 + f] = x.data[order[p] * 3 + f];
    }
    EXPECT_EQ(net.forward(xp).data, y.data);
  }
}

TEST(BatchNorm, InferIndependentOfBatchAndStatsOnlyMoveInTrain) {
  Rng rng(9);
  Network net(pointnet_specs(3, std::vector<std::size_t>{6}), rng);
  for (int i = 0; i < 3; ++i) net.forward(random_tensor(4, 5, 3, rng));
  const auto state = net.state();
  net.set_mode(Mode::Infer);
  const Tensor a = random_tensor(1, 5, 3, rng);
  const Tensor b = random_tensor(1, 5, 3, rng);
  Tensor ab(2, 5, 3);
  std::copy(a.data.begin(), a.data.end(), ab.data.begin());
  std::copy(b.data.begin(), b.data.end(), ab.data.begin() + 15);
  const auto ya = net.forward(a);
  const auto yab = net.forward(ab);
  EXPECT_EQ(std::vector<double>(yab.data.begin(), yab.data.begin() + ya.size()), ya.data);
  EXPECT_EQ(net.state(), state);
  net.set_mode(Mode::Train);
  net.forward(ab);
  EXPECT_NE(net.state(), state);
}

TEST(BatchNorm, RunningAverageRecurrence) {
  Rng rng(10);
  Network net({{LayerKind::BatchNorm, 2, 2}}, rng);
  const auto before = net.state();  // running mean then running variance
  Tensor x(1, 4, 2);
  x.data = {1, 0, 3, 0, 5, 2, 7, 2};
  net.forward(x);
  const auto after = net.state();
  // Batch mean (4, 1), biased variance (5, 1).
  EXPECT_DOUBLE_EQ(after[0], 0.9 * before[0] + 0.1 * 4.0);
  EXPECT_DOUBLE_EQ(after[1], 0.9 * before[1] + 0.1 * 1.0);
  EXPECT_DOUBLE_EQ(after[2], 0.9 * before[2] + 0.1 * 5.0);
  EXPECT_DOUBLE_EQ(after[3], 0.9 * before[3] + 0.1 * 1.0);
}

TEST(Adam, ZeroGradientLeavesParams) {
  AdamState st(AdamConfig{}, 3);
  std::vector<double> p = {1, 2, 3}, g = {0, 0, 0};
  adam_step(st, p, g);
  EXPECT_EQ(p, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(st.t, 1u);
}

TEST(Adam, FirstStepClosedForm) {
  AdamState st(AdamConfig{0.001, 0.9, 0.999, 1e-8}, 1);
  std::vector<double> p = {0.0}, g = {1.0};
  adam_step(st, p, g);
  EXPECT_NEAR(p[0], -0.001 / (1 + 1e-8), 1e-15);
}

TEST(Adam, MomentRecurrences) {
  const AdamConfig cfg{0.01, 0.9, 0.999, 1e-8};
  AdamState st(cfg, 2);
  std::vector<double> p = {0.3, -0.2};
  double m[2] = {0, 0}, v[2] = {0, 0}, q[2] = {0.3, -0.2};
  const double grads[3][2] = {{1, -2}, {0.5, 0.25}, {-3, 1}};
  for (int t = 1; t <= 3; ++t) {
    std::vector<double> g(grads[t - 1], grads[t - 1] + 2);
    adam_step(st, p, g);
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      q[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
      EXPECT_NEAR(st.m[i], m[i], 1e-15);
      EXPECT_NEAR(st.v[i], v[i], 1e-15);
      EXPECT_NEAR(p[i], q[i], 1e-14);
    }
    EXPECT_EQ(st.t, static_cast<std::size_t>(t));
  }
}

TEST(Adam, NonFiniteGradientRejectedUntouched) {
  AdamState st(AdamConfig{}, 2);
  std::vector<double> p = {1, 2}, g = {0.5, std::nan("")};
  EXPECT_THROW(adam_step(st, p, g), NumericError);
  EXPECT_EQ(p, (std::vector<double>{1, 2}));
  EXPECT_EQ(st.t, 0u);
}

TEST(Determinism, SameSeedSameParametersAfterTraining) {
  auto run = [] {
    Rng rng(11);
    Network net(pointnet_specs(3, std::vector<std::size_t>{8, 4}), rng);
    AdamState st(AdamConfig{}, net.param_count());
    for (int step = 0; step < 5; ++step) {
      Tensor x = random_tensor(2, 6, 3, rng);
      const Tensor y = net.forward(x);
      Tensor g;
      projection_loss(y.size(), 3)(y, g);
      net.zero_grad();
      net.backward(g);
      adam_step(st, net.params(), net.grads());
    }
    return std::vector<double>(net.params().begin(), net.params().end());
  };
  EXPECT_EQ(run(), run());
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(12);
  Network net(pointnet_specs(3, std::vector<std::size_t>{8, 4}), rng);
  net.forward(random_tensor(2, 5, 3, rng));
  Checkpoint ck;
  ck.kind = "test";
  ck.seed = 99;
  ck.networks.emplace("enc", net);
  AdamState st(AdamConfig{}, net.param_count());
  st.m[0] = 1.0 / 3.0;
  st.t = 4;
  ck.optimizers.emplace("enc", st);
  ck.meta["note"] = "x";
  const auto path = std::filesystem::temp_directory_path() / "upcc_ckpt_test.json";
  save_checkpoint(path, ck);
  const auto back = load_checkpoint(path);
  EXPECT_EQ(back.kind, "test");
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.meta.at("note"), "x");
  const Network& n2 = back.networks.at("enc");
  EXPECT_EQ(std::vector<double>(n2.params().begin(), n2.params().end()),
            std::vector<double>(net.params().begin(), net.params().end()));
  EXPECT_EQ(n2.state(), net.state());
  EXPECT_EQ(back.optimizers.at("enc").m, st.m);
  EXPECT_EQ(back.optimizers.at("enc").t, 4u);

  Network other(pointnet_specs(3, std::vector<std::size_t>{8, 5}), rng);
  EXPECT_THROW(restore_into(other, n2, "enc"), CheckpointError);
  Network same(pointnet_specs(3, std::vector<std::size_t>{8, 4}), rng);
  restore_into(same, n2, "enc");
  EXPECT_EQ(same.state(), net.state());
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsCorruptFiles) {
  const auto path = std::filesystem::temp_directory_path() / "upcc_ckpt_bad.json";
  std::ofstream(path) << "{\"format\": \"something-else\"}";
  EXPECT_THROW(load_checkpoint(path), CheckpointError);
  std::ofstream(path) << "not json";
  EXPECT_THROW(load_checkpoint(path), CheckpointError);
  EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.json"), CheckpointError);
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsTamperedArchitectureHash) {
  Rng rng(13);
  Checkpoint ck;
  ck.kind = "test";
  ck.networks.emplace("n", Network(mlp_specs(2, std::vector<std::size_t>{3, 1}), rng));
  const auto path = std::filesystem::temp_directory_path() / "upcc_ckpt_hash.json";
  save_checkpoint(path, ck);
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto pos = text.find("\"architecture_hash\"");
  ASSERT_NE(pos, std::string::npos);
  const auto digit = text.find_first_of("0123456789abcdef", text.find(':', pos) + 3);
  text[digit] = text[digit] == '0' ? '1' : '0';
  std::ofstream(path) << text;
  EXPECT_THROW(load_checkpoint(path), CheckpointError);
  std::filesystem::remove(path);
}
