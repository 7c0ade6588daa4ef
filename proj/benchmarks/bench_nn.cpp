#include <benchmark/benchmark.h>

#include "upcc/autoencoder.hpp"
#include "upcc/rng.hpp"

using namespace upcc;

namespace {

std::vector<PointSet> batch(std::size_t count, std::size_t n, Rng& rng) {
  std::vector<PointSet> out;
  for (std::size_t b = 0; b < count; ++b) {
    std::vector<Vec3> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    out.emplace_back(pts);
  }
  return out;
}

// Desk-scale encoder forward on a batch of 20 clouds.
void BM_EncoderForward(benchmark::State& state) {
  Rng rng(1);
  Autoencoder ae(AutoencoderSpec::desk_scale(static_cast<std::size_t>(state.range(0))), rng);
  ae.set_mode(nn::Mode::Infer);
  const auto clouds = batch(20, static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(ae.encode(clouds).front().values.data());
  state.SetItemsProcessed(state.iterations() * 20);
}
BENCHMARK(BM_EncoderForward)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

// One optimizer step of the desk-scale autoencoder, EMD loss included.
void BM_AutoencoderTrainStep(benchmark::State& state) {
  Rng rng(2);
  Autoencoder ae(AutoencoderSpec::desk_scale(), rng);
  const auto clouds = batch(20, 128, rng);
  nn::AdamState eo(nn::AdamConfig{}, ae.encoder().param_count());
  nn::AdamState dopt(nn::AdamConfig{}, ae.decoder().param_count());
  for (auto _ : state) benchmark::DoNotOptimize(ae.train_step(clouds, eo, dopt));
}
BENCHMARK(BM_AutoencoderTrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
