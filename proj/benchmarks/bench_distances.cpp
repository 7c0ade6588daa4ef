#include <benchmark/benchmark.h>

#include "upcc/distances.hpp"
#include "upcc/rng.hpp"

using namespace upcc;

namespace {

PointSet cloud(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
  return PointSet(pts);
}

void BM_EmdHungarian(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const PointSet a = cloud(n, 1), b = cloud(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(emd(a, b, AssignmentMethod::Hungarian).cost);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EmdHungarian)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

void BM_EmdAuction(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const PointSet a = cloud(n, 1), b = cloud(n, 2);
  double gap = 0.0;
  for (auto _ : state) {
    const auto r = emd(a, b, AssignmentMethod::Auction);
    gap = r.certified_gap;
    benchmark::DoNotOptimize(r.cost);
  }
  state.counters["certified_gap"] = gap;
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EmdAuction)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

void BM_Chamfer(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const PointSet a = cloud(n, 3), b = cloud(n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(chamfer(a, b));
}
BENCHMARK(BM_Chamfer)->Arg(128)->Arg(2048);

void BM_SoftHausdorffGrad(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const PointSet s = cloud(n, 5), r = cloud(n, 6);
  for (auto _ : state) benchmark::DoNotOptimize(hausdorff_directed_grad(s, r, 0.01).value);
}
BENCHMARK(BM_SoftHausdorffGrad)->Arg(128)->Arg(2048);

}  // namespace

BENCHMARK_MAIN();
