#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "upcc/autoencoder.hpp"
#include "upcc/distances.hpp"
#include "upcc/error.hpp"
#include "upcc/nn/grad_check.hpp"
#include "upcc/scan_synth.hpp"

using namespace upcc;

namespace {

AutoencoderSpec small_spec(std::size_t n = 16, std::size_t k = 8) { return {n, k, {16, 16}, {32}}; }

PointSet random_cloud(std::size_t n, Rng& rng) {
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
  return normalize_unit_sphere(PointSet(pts));
}

std::vector<PointSet> toy_shapes(std::size_t count, std::size_t n) {
  std::vector<PointSet> out;
  Rng rng(21);
  for (std::size_t i = 0; i < count; ++i) {
    const auto fam = all_families()[i % all_families().size()];
    out.push_back(generate_shape(sample_params(fam, rng), n, rng, 24).cloud);
  }
  return out;
}

}  // namespace

TEST(Autoencoder, SpecValidation) {
  EXPECT_THROW(AutoencoderSpec({0, 4, {8}, {8}}).validate(), InvalidArgument);
  EXPECT_THROW(AutoencoderSpec({8, 0, {8}, {8}}).validate(), InvalidArgument);
  EXPECT_THROW(AutoencoderSpec({8, 4, {8, 0}, {8}}).validate(), InvalidArgument);
  EXPECT_NO_THROW(AutoencoderSpec::paper_scale().validate());
  EXPECT_EQ(AutoencoderSpec::paper_scale().n, 2048u);
  EXPECT_EQ(AutoencoderSpec::paper_scale().k, 128u);
}

TEST(Autoencoder, EncodeIsPermutationInvariantInInferMode) {
  Rng rng(1);
  Autoencoder ae(small_spec(32), rng);
  ae.set_mode(nn::Mode::Infer);
  const auto cloud = random_cloud(32, rng);
  const auto z = ae.encode(cloud);
  ASSERT_EQ(z.size(), 8u);
  std::vector<std::size_t> order(32);
  std::iota(order.begin(), order.end(), 0);
  for (int t = 0; t < 25; ++t) {
    rng.shuffle(order.begin(), order.end());
    EXPECT_EQ(ae.encode(permuted(cloud, order)).values, z.values);
  }
}

TEST(Autoencoder, ShapeContracts) {
  Rng rng(2);
  Autoencoder ae(small_spec(), rng);
  ae.set_mode(nn::Mode::Infer);
  EXPECT_THROW(ae.encode(random_cloud(15, rng)), InvalidArgument);
  EXPECT_THROW(ae.decode(LatentCode{std::vector<double>(7, 0.0)}), InvalidArgument);
  for (int t = 0; t < 5; ++t) {
    LatentCode z{std::vector<double>(8)};
    for (auto& v : z.values) v = rng.normal();
    EXPECT_EQ(ae.decode(z).size(), 16u);
  }
}

TEST(Autoencoder, UntrainedCodeIsDeterministic) {
  Rng a(3), b(3);
  Autoencoder x(small_spec(), a), y(small_spec(), b);
  x.set_mode(nn::Mode::Infer);
  y.set_mode(nn::Mode::Infer);
  std::vector<Vec3> zeros(16, Vec3{0, 0, 0});
  EXPECT_EQ(x.encode(PointSet(zeros)).values, y.encode(PointSet(zeros)).values);
}

TEST(Autoencoder, LossOfUnitShiftIsOne) {
  Rng rng(4);
  Autoencoder ae(small_spec(), rng);
  ae.set_mode(nn::Mode::Infer);
  const auto cloud = random_cloud(16, rng);
  // Decoder weights zero and final bias = shifted cloud: output is that cloud.
  auto params = ae.decoder().params();
  std::fill(params.begin(), params.end(), 0.0);
  const auto shifted = translated(cloud, {0, 0, 1}).flat();
  std::copy(shifted.begin(), shifted.end(), params.end() - static_cast<std::ptrdiff_t>(shifted.size()));
  const PointSet batch[] = {cloud};
  EXPECT_NEAR(ae.loss(batch), 1.0, 1e-12);
  const auto flat = cloud.flat();
  std::copy(flat.begin(), flat.end(), params.end() - static_cast<std::ptrdiff_t>(flat.size()));
  EXPECT_NEAR(ae.loss(batch), 0.0, 1e-12);
}

TEST(Autoencoder, EndToEndGradientThroughEmd) {
  Rng rng(5);
  Autoencoder ae(small_spec(), rng);
  std::vector<PointSet> batch = {random_cloud(16, rng), random_cloud(16, rng), random_cloud(16, rng)};
  // A zero learning rate leaves the parameters in place but fills the grads.
  nn::AdamState eo(nn::AdamConfig{0.0}, ae.encoder().param_count());
  nn::AdamState dopt(nn::AdamConfig{0.0}, ae.decoder().param_count());
  const auto state = ae.encoder().state();
  ae.train_step(batch, eo, dopt);
  const std::vector<double> enc_grad(ae.encoder().grads().begin(), ae.encoder().grads().end());
  const std::vector<double> dec_grad(ae.decoder().grads().begin(), ae.decoder().grads().end());
  auto loss = [&] {
    ae.encoder().set_state(state);
    return ae.loss(batch);
  };
  nn::GradCheckOptions opt;
  opt.max_params = 400;
  const auto re = nn::check_gradients(ae.encoder().params(), enc_grad, loss, opt);
  const auto rd = nn::check_gradients(ae.decoder().params(), dec_grad, loss, opt);
  EXPECT_LT(re.max_relative_error, 1e-4) << re.worst_analytic << " vs " << re.worst_numeric;
  EXPECT_LT(rd.max_relative_error, 1e-4) << rd.worst_analytic << " vs " << rd.worst_numeric;
}

TEST(Autoencoder, ToyTrainingHalvesLossAndIsDeterministic) {
  const auto shapes = toy_shapes(4, 64);
  AeTrainConfig cfg = AeTrainConfig::desk();
  cfg.batch_size = 4;
  cfg.epochs = 200;
  const AutoencoderSpec spec{64, 16, {32, 64}, {128}};
  const auto a = train_ae(shapes, spec, cfg);
  ASSERT_EQ(a.loss_curve.size(), 200u);
  EXPECT_LT(a.loss_curve.back(), 0.5 * a.loss_curve.front());
  cfg.epochs = 20;
  const auto b = train_ae(shapes, spec, cfg);
  const auto c = train_ae(shapes, spec, cfg);
  EXPECT_EQ(b.loss_curve, c.loss_curve);
  EXPECT_EQ(std::vector<double>(a.loss_curve.begin(), a.loss_curve.begin() + 20), b.loss_curve);

  auto ae = a.ae;
  ae.set_mode(nn::Mode::Infer);
  const auto z0 = ae.encode(shapes[0]), z1 = ae.encode(shapes[1]);
  double d = 0;
  for (std::size_t i = 0; i < z0.size(); ++i) d += (z0.values[i] - z1.values[i]) * (z0.values[i] - z1.values[i]);
  EXPECT_GT(d, 0.0);

  // Nearby codes decode to nearby clouds.
  LatentCode zn = z0;
  for (auto& v : zn.values) v += 1e-5;
  EXPECT_LT(emd(ae.decode(z0), ae.decode(zn)).cost, 1e-2);
}

TEST(Autoencoder, LearningRateDecaysPerEpoch) {
  const auto shapes = toy_shapes(2, 32);
  AeTrainConfig cfg = AeTrainConfig::desk();
  cfg.adam.lr = 0.001;
  cfg.lr_decay = 0.5;
  cfg.batch_size = 2;
  cfg.epochs = 3;
  const AutoencoderSpec spec{32, 8, {16}, {32}};
  const auto t = train_ae(shapes, spec, cfg);
  EXPECT_DOUBLE_EQ(t.encoder_opt.config.lr, 0.000125);
  EXPECT_DOUBLE_EQ(t.decoder_opt.config.lr, 0.000125);
  cfg.epochs = 1;
  const auto one = train_ae(shapes, spec, cfg);
  cfg.lr_decay = 1.0;
  EXPECT_EQ(train_ae(shapes, spec, cfg).loss_curve, one.loss_curve);
  for (double bad : {0.0, -0.5, 1.01}) {
    cfg.lr_decay = bad;
    EXPECT_THROW(train_ae(shapes, spec, cfg), InvalidArgument);
  }
}

TEST(Autoencoder, SingleShapeCapacity) {
  // k >= 3n and a linear decoder: the code is wide enough to carry the whole cloud.
  const auto shapes = toy_shapes(1, 16);
  AeTrainConfig cfg;
  cfg.adam.lr = 0.00005;
  cfg.batch_size = 1;
  cfg.epochs = 3000;
  const auto t = train_ae(shapes, AutoencoderSpec{16, 48, {}, {}}, cfg);
  EXPECT_LT(t.loss_curve.back(), 1e-3);
}

TEST(Autoencoder, PresetsByName) {
  const auto p = AeTrainConfig::preset("paper");
  EXPECT_EQ(p.adam.lr, 0.0005);
  EXPECT_EQ(p.adam.beta1, 0.9);
  EXPECT_EQ(p.batch_size, 200u);
  EXPECT_EQ(p.epochs, 2000u);
  EXPECT_NO_THROW(AeTrainConfig::preset("desk-scale"));
  EXPECT_THROW(AeTrainConfig::preset("nope"), InvalidArgument);
}

TEST(Autoencoder, CheckpointRoundTrip) {
  const auto shapes = toy_shapes(2, 16);
  AeTrainConfig cfg;
  cfg.batch_size = 2;
  cfg.epochs = 3;
  const auto t = train_ae(shapes, small_spec(), cfg);
  const auto path = std::filesystem::temp_directory_path() / "upcc_ae_ckpt.json";
  nn::save_checkpoint(path, to_checkpoint(t, 42));
  auto back = autoencoder_from_checkpoint(nn::load_checkpoint(path));
  auto orig = t.ae;
  EXPECT_EQ(back.encode(shapes[0]).values, orig.encode(shapes[0]).values);
  EXPECT_EQ(back.reconstruct(shapes[1]), orig.reconstruct(shapes[1]));
  std::filesystem::remove(path);
}
