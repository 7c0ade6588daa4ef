#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "upcc/mesh.hpp"
#include "upcc/point_set.hpp"
#include "upcc/rng.hpp"

namespace upcc {

/// Procedural shape categories. All are canonically oriented, y up.
enum class ShapeFamily { Box, Cylinder, Ellipsoid, Table4, Chair5, Lampoid };

std::string to_string(ShapeFamily f);
ShapeFamily family_from_string(const std::string& s);
const std::vector<ShapeFamily>& all_families();

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Named parameters of one shape instance.
struct ShapeParams {
  ShapeFamily family = ShapeFamily::Box;
  std::map<std::string, double> values;
};

const std::map<std::string, ParamRange>& parameter_ranges(ShapeFamily family);
ShapeParams sample_params(ShapeFamily family, Rng& rng);
/// Throws InvalidArgument if a parameter is missing, unknown or out of range.
void validate(const ShapeParams& params);
Mesh build_mesh(const ShapeParams& params);

/// Orthographic camera looking along -direction at the target.
struct Camera {
  Vec3 direction;  // unit vector from the target toward the camera
};

/// Eight cameras at the cube-corner directions.
std::vector<Camera> cube_corner_rig();

/// Union over cameras of the first hits of a res x res grid of parallel rays
/// covering the mesh's bounding sphere. Throws if nothing is hit.
PointSet virtual_scan(const Mesh& mesh, const std::vector<Camera>& cameras,
                      std::size_t resolution = 48);

struct GeneratedShape {
  Mesh mesh;       // in the same normalized frame as the cloud
  PointSet cloud;  // n points on the unit sphere scale
};

/// Builds the mesh, scans it with the cube-corner rig, farthest-point
/// downsamples to n and normalizes mesh and cloud together.
GeneratedShape generate_shape(const ShapeParams& params, std::size_t n, Rng& rng,
                              std::size_t scan_resolution = 48);

struct CorruptionSpec {
  double r = 0.0;       // incompleteness fraction in [0, 1)
  double sigma = 0.01;  // per-coordinate noise std-dev
  std::uint64_t seed = 0;

  /// sigma = 0.01.
  static CorruptionSpec paper_default(double r) { return {r, 0.01, 0}; }
};

/// Number of points a corruption removes from an n-point cloud: floor(n r).
std::size_t removal_count(std::size_t n, double r);

struct Corruption {
  PointSet partial;
  std::size_t picked = 0;
  std::vector<std::size_t> survivors;  // clean indices kept, ascending
};

/// Removes the point at `picked` together with its removal_count - 1 nearest
/// neighbours, adds N(0, sigma^2) noise to the survivors, then pads back to
/// n with duplicates.
Corruption corrupt_at(const PointSet& clean, const CorruptionSpec& spec, std::size_t picked,
                      Rng& rng);
/// corrupt_at with a uniformly drawn pick, using an Rng seeded from spec.seed.
PointSet corrupt(const PointSet& clean, const CorruptionSpec& spec);

struct DatasetConfig {
  std::vector<ShapeFamily> families{ShapeFamily::Chair5};
  std::size_t n = 128;
  std::size_t shapes_per_family = 100;
  double test_fraction = 0.1;
  double sigma = 0.01;
  /// Training partials draw r uniformly from this range.
  double r_train_min = 0.1;
  double r_train_max = 0.5;
  /// Incompleteness of the default test partials.
  double r_test = 0.3;
  /// Additional test partials at each of these r.
  std::vector<double> sweep_r{0.1, 0.2, 0.3, 0.4, 0.5};
  std::size_t scan_resolution = 48;
  std::uint64_t seed = 42;
};

struct DatasetItem {
  std::size_t instance = 0;
  ShapeParams params;
  PointSet cloud;
  double r = 0.0;  // corruption applied (0 for clean clouds)
  std::uint64_t seed = 0;
};

/// Clean and partial sets for unpaired training. partial_train instances are
/// sampled separately from clean_train, so no correspondence exists. Test
/// partials are corruptions of clean_test, kept paired for evaluation only.
struct Dataset {
  std::vector<DatasetItem> clean_train;
  std::vector<DatasetItem> clean_test;
  std::vector<DatasetItem> partial_train;
  /// Clean source of each partial_train item; read only by supervised modes.
  std::vector<PointSet> partial_train_gt;
  std::vector<DatasetItem> partial_test;  // partial_test[i] corrupts clean_test[i]
  std::map<std::string, std::vector<DatasetItem>> partial_test_sweep;  // key: r label

  std::vector<PointSet> clouds(const std::vector<DatasetItem>& items) const;
};

std::string r_label(double r);

Dataset make_dataset(const DatasetConfig& cfg);

/// Writes PLY files and manifest.json under dir; load_dataset reads them
/// back (clouds then carry float32 precision).
void save_dataset(const std::filesystem::path& dir, const Dataset& ds, const DatasetConfig& cfg);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace upcc
