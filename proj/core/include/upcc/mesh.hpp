#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "upcc/point_set.hpp"
#include "upcc/vec3.hpp"

namespace upcc {

struct Triangle {
  Vec3 a, b, c;
};

struct Aabb {
  Vec3 lo{1e300, 1e300, 1e300};
  Vec3 hi{-1e300, -1e300, -1e300};

  void extend(const Vec3& p);
  bool hit_by(const Vec3& origin, const Vec3& inv_dir, double t_max) const;
};

struct Ray {
  Vec3 origin;
  Vec3 direction;
};

/// Triangle soup grouped into parts (one per primitive), each with its own
/// bounding box for ray culling.
class Mesh {
 public:
  struct Part {
    std::size_t first = 0;
    std::size_t count = 0;
    Aabb bounds;
  };

  void begin_part();
  void add(const Triangle& t);

  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Part>& parts() const { return parts_; }
  std::size_t size() const { return triangles_.size(); }
  Aabb bounds() const;

  /// Distance along the ray to the first hit, if any.
  std::optional<double> first_hit(const Ray& ray) const;

  /// Same mesh under p -> (p - center) * scale.
  Mesh transformed(const Normalization& t) const;

  /// Distance from p to the nearest triangle.
  double distance_to(const Vec3& p) const;

 private:
  std::vector<Triangle> triangles_;
  std::vector<Part> parts_;
};

/// Moller-Trumbore, double-sided. Returns t > t_min of the hit.
std::optional<double> intersect(const Ray& ray, const Triangle& tri, double t_min = 1e-12);

double point_triangle_distance(const Vec3& p, const Triangle& tri);

// Primitive builders; each call starts a new part. Shapes are y-up.
void add_box(Mesh& mesh, const Vec3& center, const Vec3& half_extent);
/// Capped cylinder or truncated cone along +y from base_center.
void add_frustum(Mesh& mesh, const Vec3& base_center, double bottom_radius, double top_radius,
                 double height, std::size_t segments = 24, bool capped = true);
void add_ellipsoid(Mesh& mesh, const Vec3& center, const Vec3& radii, std::size_t stacks = 16,
                   std::size_t slices = 24);

}  // namespace upcc
