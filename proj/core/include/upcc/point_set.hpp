#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "upcc/rng.hpp"
#include "upcc/vec3.hpp"

namespace upcc {

/// Ordered sequence of points in 3-space. Every coordinate is finite and the
/// set is never empty.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::vector<Vec3> points);
  PointSet(std::initializer_list<Vec3> points);

  /// Builds from a flat x0,y0,z0,x1,... buffer (length divisible by 3).
  static PointSet from_flat(std::span<const double> xyz);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& operator[](std::size_t i) const { return points_[i]; }
  std::span<const Vec3> points() const { return points_; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  std::vector<double> flat() const;
  Vec3 centroid() const;
  double max_radius(const Vec3& center) const;

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  std::vector<Vec3> points_;
};

/// Result of normalize_unit_sphere: the normalized set and the transform
/// applied, so that other geometry can be brought into the same frame.
struct Normalization {
  Vec3 center;
  double scale = 1.0;  // multiply after subtracting center

  Vec3 apply(const Vec3& p) const { return (p - center) * scale; }
};

/// Translates the centroid to the origin and scales so the farthest point
/// has norm one. Throws InvalidArgument("zero extent") if all points coincide.
PointSet normalize_unit_sphere(const PointSet& set);
Normalization unit_sphere_transform(const PointSet& set);
PointSet apply(const Normalization& t, const PointSet& set);

/// Indices of the k points closest to query, ascending by distance, ties
/// broken by lower index.
std::vector<std::size_t> nearest_neighbors(const PointSet& set, const Vec3& query, std::size_t k);

/// Farthest-point sampling of m points. The first index is drawn from rng;
/// output order is selection order.
PointSet downsample(const PointSet& set, std::size_t m, Rng& rng);
/// Farthest-point sampling from a fixed start index. Returns selected indices.
std::vector<std::size_t> farthest_point_indices(const PointSet& set, std::size_t m,
                                                std::size_t start);

/// Pads to m points: the first n are the input, the rest are copies drawn
/// uniformly with replacement.
PointSet duplicate_to_count(const PointSet& set, std::size_t m, Rng& rng);

PointSet permuted(const PointSet& set, std::span<const std::size_t> order);
PointSet translated(const PointSet& set, const Vec3& offset);

}  // namespace upcc
