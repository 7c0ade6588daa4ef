#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "upcc/error.hpp"
#include "upcc/mesh.hpp"
#include "upcc/scan_synth.hpp"

using namespace upcc;

namespace {

PointSet line(std::size_t n) {
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({static_cast<double>(i), 0, 0});
  return PointSet(pts);
}

Mesh unit_sphere() {
  Mesh m;
  add_ellipsoid(m, {0, 0, 0}, {1, 1, 1});
  return m;
}

DatasetConfig small_config() {
  DatasetConfig cfg;
  cfg.families = {ShapeFamily::Box, ShapeFamily::Chair5};
  cfg.n = 32;
  cfg.shapes_per_family = 10;
  cfg.scan_resolution = 24;
  cfg.sweep_r = {0.2, 0.4};
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST(Mesh, RayHitsPlaneExactly) {
  const Triangle tri{{-1, -1, 0}, {3, -1, 0}, {-1, 3, 0}};
  for (double x : {-0.5, 0.0, 0.25, 0.9}) {
    const Ray ray{{x, 0.1, 5.0}, {0, 0, -1}};
    auto t = intersect(ray, tri);
    ASSERT_TRUE(t.has_value());
    const Vec3 hit = ray.origin + ray.direction * *t;
    EXPECT_NEAR(hit.z, 0.0, 1e-9);
    EXPECT_NEAR(hit.x, x, 1e-9);
  }
  EXPECT_FALSE(intersect({{5, 5, 1}, {0, 0, -1}}, tri).has_value());
  EXPECT_FALSE(intersect({{0, 0, 1}, {0, 0, 1}}, tri).has_value());
}

TEST(VirtualScan, SphereIsCoveredFromCubeCorners) {
  const Mesh mesh = unit_sphere();
  const PointSet scan = virtual_scan(mesh, cube_corner_rig(), 32);
  std::set<int> octants;
  for (const auto& p : scan) {
    EXPECT_LT(mesh.distance_to(p), 1e-9);
    EXPECT_LE(norm(p), 1.0 + 1e-9);
    octants.insert((p.x > 0) | ((p.y > 0) << 1) | ((p.z > 0) << 2));
  }
  EXPECT_EQ(octants.size(), 8u);
}

TEST(VirtualScan, BoxShowsAllSixFaces) {
  Mesh mesh;
  add_box(mesh, {0, 0, 0}, {1, 1, 1});
  const PointSet scan = virtual_scan(mesh, cube_corner_rig(), 24);
  std::set<int> faces;
  for (const auto& p : scan) {
    for (int c = 0; c < 3; ++c) {
      if (std::abs(p[c] - 1.0) < 1e-9) faces.insert(2 * c);
      if (std::abs(p[c] + 1.0) < 1e-9) faces.insert(2 * c + 1);
    }
  }
  EXPECT_EQ(faces.size(), 6u);
}

TEST(VirtualScan, SingleCameraSeesOneHemisphere) {
  const Mesh mesh = unit_sphere();
  const PointSet front = virtual_scan(mesh, {Camera{{0, 0, 1}}}, 32);
  for (const auto& p : front) EXPECT_GT(p.z, -1e-9);

  const PointSet both = virtual_scan(mesh, {Camera{{0, 0, 1}}, Camera{{0, 0, -1}}}, 32);
  EXPECT_EQ(both.size(), 2 * front.size());
  std::size_t below = 0;
  for (const auto& p : both) below += p.z < 0;
  EXPECT_EQ(below, front.size());
}

TEST(VirtualScan, RejectsDegenerateInput) {
  EXPECT_THROW(virtual_scan(unit_sphere(), {}, 8), InvalidArgument);
  EXPECT_THROW(virtual_scan(unit_sphere(), cube_corner_rig(), 0), InvalidArgument);
  EXPECT_THROW(virtual_scan(Mesh{}, cube_corner_rig(), 8), InvalidArgument);
}

TEST(ShapeParams, ValidateRejectsBadValues) {
  Rng rng(3);
  for (auto f : all_families()) {
    ShapeParams p = sample_params(f, rng);
    EXPECT_NO_THROW(validate(p));
    for (const auto& [name, range] : parameter_ranges(f)) {
      EXPECT_GE(p.values.at(name), range.lo);
      EXPECT_LE(p.values.at(name), range.hi);
    }
    ShapeParams missing = p;
    missing.values.erase(missing.values.begin());
    EXPECT_THROW(validate(missing), InvalidArgument);
    ShapeParams unknown = p;
    unknown.values["bogus"] = 0.5;
    EXPECT_THROW(validate(unknown), InvalidArgument);
    ShapeParams out_of_range = p;
    out_of_range.values.begin()->second = parameter_ranges(f).begin()->second.hi + 1.0;
    EXPECT_THROW(validate(out_of_range), InvalidArgument);
    EXPECT_THROW(build_mesh(out_of_range), InvalidArgument);
  }
  EXPECT_EQ(family_from_string(to_string(ShapeFamily::Lampoid)), ShapeFamily::Lampoid);
  EXPECT_THROW(family_from_string("sofa"), InvalidArgument);
}

TEST(GenerateShape, CloudIsNormalizedAndLiesOnMesh) {
  Rng rng(11);
  for (auto f : all_families()) {
    const ShapeParams p = sample_params(f, rng);
    Rng gen(5);
    const auto shape = generate_shape(p, 64, gen, 32);
    ASSERT_EQ(shape.cloud.size(), 64u);
    double far = 0.0;
    Vec3 mean{0, 0, 0};
    for (const auto& q : shape.cloud) {
      far = std::max(far, norm(q));
      mean += q;
      EXPECT_LT(shape.mesh.distance_to(q), 1e-9) << to_string(f);
    }
    EXPECT_NEAR(far, 1.0, 1e-9) << to_string(f);
    EXPECT_NEAR(norm(mean * (1.0 / 64)), 0.0, 1e-9) << to_string(f);
  }
}

TEST(GenerateShape, RejectsTinyN) {
  Rng rng(1);
  const ShapeParams p = sample_params(ShapeFamily::Box, rng);
  EXPECT_THROW(generate_shape(p, 7, rng, 16), InvalidArgument);
  EXPECT_NO_THROW(generate_shape(p, 8, rng, 16));
}

TEST(Corruption, RemovalCount) {
  EXPECT_EQ(removal_count(100, 0.29), 29u);
  EXPECT_EQ(removal_count(10, 0.5), 5u);
  EXPECT_EQ(removal_count(2048, 0.0), 0u);
  EXPECT_EQ(removal_count(7, 0.3), 2u);
  EXPECT_THROW(removal_count(10, 1.0), InvalidArgument);
  EXPECT_THROW(removal_count(10, -0.1), InvalidArgument);
}

TEST(Corruption, ZeroRateZeroNoiseIsIdentity) {
  const PointSet clean = line(16);
  Rng rng(4);
  const auto c = corrupt_at(clean, {0.0, 0.0, 0}, 3, rng);
  EXPECT_EQ(c.partial, clean);
  EXPECT_EQ(c.survivors.size(), 16u);
  EXPECT_EQ(corrupt(clean, {0.0, 0.0, 99}), clean);
}

TEST(Corruption, LineExampleKeepsFarHalf) {
  const PointSet clean = line(8);
  Rng rng(2);
  const auto c = corrupt_at(clean, {0.5, 0.0, 0}, 0, rng);
  EXPECT_EQ(c.survivors, (std::vector<std::size_t>{4, 5, 6, 7}));
  ASSERT_EQ(c.partial.size(), 8u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(c.partial[i].x, 4.0 + i);
  for (std::size_t i = 4; i < 8; ++i) {
    EXPECT_GE(c.partial[i].x, 4.0);
    EXPECT_EQ(c.partial[i].x, std::floor(c.partial[i].x));
  }
}

TEST(Corruption, NoiseHasRequestedSpread) {
  const PointSet clean = line(4000);
  Rng rng(8);
  const auto c = corrupt_at(clean, {0.0, 0.05, 0}, 0, rng);
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      const double d = c.partial[i][k] - clean[i][k];
      sum += d;
      sq += d * d;
    }
  }
  const double m = 3.0 * static_cast<double>(clean.size());
  EXPECT_NEAR(sum / m, 0.0, 0.003);
  EXPECT_NEAR(std::sqrt(sq / m), 0.05, 0.002);
}

TEST(Corruption, RejectsBadSpecs) {
  const PointSet clean = line(8);
  Rng rng(1);
  EXPECT_THROW(corrupt_at(clean, {0.3, -0.1, 0}, 0, rng), InvalidArgument);
  EXPECT_THROW(corrupt_at(clean, {0.3, 0.0, 0}, 8, rng), InvalidArgument);
  EXPECT_THROW(corrupt_at(clean, {1.0, 0.0, 0}, 0, rng), InvalidArgument);
}

TEST(Dataset, SplitSizesAndDisjointInstances) {
  const auto cfg = small_config();
  const Dataset ds = make_dataset(cfg);
  EXPECT_EQ(ds.clean_train.size(), 18u);
  EXPECT_EQ(ds.clean_test.size(), 2u);
  EXPECT_EQ(ds.partial_train.size(), 18u);
  EXPECT_EQ(ds.partial_train_gt.size(), 18u);
  ASSERT_EQ(ds.partial_test.size(), 2u);
  EXPECT_EQ(ds.partial_test_sweep.size(), 2u);

  std::set<std::size_t> ids;
  for (const auto* split : {&ds.clean_train, &ds.clean_test, &ds.partial_train}) {
    for (const auto& it : *split) {
      EXPECT_TRUE(ids.insert(it.instance).second) << it.instance;
      EXPECT_EQ(it.cloud.size(), cfg.n);
    }
  }
  for (std::size_t i = 0; i < ds.partial_test.size(); ++i) {
    EXPECT_EQ(ds.partial_test[i].instance, ds.clean_test[i].instance);
    EXPECT_EQ(ds.partial_test[i].r, cfg.r_test);
    for (const auto& [label, items] : ds.partial_test_sweep) {
      EXPECT_EQ(items[i].instance, ds.clean_test[i].instance);
    }
  }
  for (const auto& it : ds.partial_train) {
    EXPECT_GE(it.r, cfg.r_train_min);
    EXPECT_LE(it.r, cfg.r_train_max);
  }
  EXPECT_TRUE(ds.partial_test_sweep.count(r_label(0.2)));
  EXPECT_EQ(r_label(0.4), "r0.40");
}

TEST(Dataset, Deterministic) {
  const Dataset a = make_dataset(small_config());
  const Dataset b = make_dataset(small_config());
  ASSERT_EQ(a.clean_train.size(), b.clean_train.size());
  for (std::size_t i = 0; i < a.clean_train.size(); ++i) {
    EXPECT_EQ(a.clean_train[i].cloud, b.clean_train[i].cloud);
  }
  for (std::size_t i = 0; i < a.partial_train.size(); ++i) {
    EXPECT_EQ(a.partial_train[i].cloud, b.partial_train[i].cloud);
  }
  auto other = small_config();
  other.seed = 8;
  EXPECT_NE(make_dataset(other).clean_train[0].cloud, a.clean_train[0].cloud);
}

TEST(Dataset, SaveLoadRoundTrip) {
  const auto cfg = small_config();
  const Dataset ds = make_dataset(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "upcc_dataset_roundtrip";
  std::filesystem::remove_all(dir);
  save_dataset(dir, ds, cfg);
  const Dataset back = load_dataset(dir);
  ASSERT_EQ(back.clean_test.size(), ds.clean_test.size());
  ASSERT_EQ(back.partial_train.size(), ds.partial_train.size());
  ASSERT_EQ(back.partial_test_sweep.size(), ds.partial_test_sweep.size());
  for (std::size_t i = 0; i < ds.clean_train.size(); ++i) {
    EXPECT_EQ(back.clean_train[i].instance, ds.clean_train[i].instance);
    EXPECT_EQ(back.clean_train[i].params.values, ds.clean_train[i].params.values);
    for (std::size_t p = 0; p < cfg.n; ++p) {
      for (int c = 0; c < 3; ++c) {
        EXPECT_NEAR(back.clean_train[i].cloud[p][c], ds.clean_train[i].cloud[p][c], 1e-6);
      }
    }
  }
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_dataset(dir), Error);
}

TEST(Dataset, RejectsBadConfigs) {
  auto cfg = small_config();
  cfg.families.clear();
  EXPECT_THROW(make_dataset(cfg), InvalidArgument);
  cfg = small_config();
  cfg.shapes_per_family = 0;
  EXPECT_THROW(make_dataset(cfg), InvalidArgument);
  cfg = small_config();
  cfg.test_fraction = 1.0;
  EXPECT_THROW(make_dataset(cfg), InvalidArgument);
  cfg = small_config();
  cfg.r_train_min = 0.6;
  EXPECT_THROW(make_dataset(cfg), InvalidArgument);
  cfg = small_config();
  cfg.r_test = 1.0;
  EXPECT_THROW(make_dataset(cfg), InvalidArgument);
  cfg = small_config();
  cfg.n = 4;
  EXPECT_THROW(make_dataset(cfg), InvalidArgument);
}
