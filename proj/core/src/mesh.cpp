#include "upcc/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace upcc {

void Aabb::extend(const Vec3& p) {
  lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
  hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
}

bool Aabb::hit_by(const Vec3& origin, const Vec3& inv_dir, double t_max) const {
  constexpr double pad = 1e-9;
  double t0 = 0.0, t1 = t_max;
  for (int a = 0; a < 3; ++a) {
    double near = (lo[a] - pad - origin[a]) * inv_dir[a];
    double far = (hi[a] + pad - origin[a]) * inv_dir[a];
    if (std::isnan(near) || std::isnan(far)) {
      // Ray parallel to this slab and on its boundary plane.
      if (origin[a] < lo[a] - pad || origin[a] > hi[a] + pad) return false;
      continue;
    }
    if (near > far) std::swap(near, far);
    t0 = std::max(t0, near);
    t1 = std::min(t1, far);
    if (t0 > t1) return false;
  }
  return true;
}

void Mesh::begin_part() { parts_.push_back({triangles_.size(), 0, {}}); }

void Mesh::add(const Triangle& t) {
  if (parts_.empty()) begin_part();
  triangles_.push_back(t);
  auto& part = parts_.back();
  part.count += 1;
  part.bounds.extend(t.a);
  part.bounds.extend(t.b);
  part.bounds.extend(t.c);
}

Aabb Mesh::bounds() const {
  Aabb box;
  for (const auto& p : parts_) {
    box.extend(p.bounds.lo);
    box.extend(p.bounds.hi);
  }
  return box;
}

std::optional<double> intersect(const Ray& ray, const Triangle& tri, double t_min) {
  const Vec3 e1 = tri.b - tri.a;
  const Vec3 e2 = tri.c - tri.a;
  const Vec3 p = cross(ray.direction, e2);
  const double det = dot(e1, p);
  if (std::abs(det) < 1e-14) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = ray.origin - tri.a;
  const double u = dot(s, p) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = cross(s, e1);
  const double v = dot(ray.direction, q) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = dot(e2, q) * inv;
  if (t <= t_min) return std::nullopt;
  return t;
}

std::optional<double> Mesh::first_hit(const Ray& ray) const {
  const Vec3 inv{1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z};
  double best = std::numeric_limits<double>::infinity();
  for (const auto& part : parts_) {
    if (!part.bounds.hit_by(ray.origin, inv, best)) continue;
    for (std::size_t i = part.first; i < part.first + part.count; ++i) {
      if (auto t = intersect(ray, triangles_[i]); t && *t < best) best = *t;
    }
  }
  if (std::isinf(best)) return std::nullopt;
  return best;
}

Mesh Mesh::transformed(const Normalization& t) const {
  Mesh out;
  for (const auto& part : parts_) {
    out.begin_part();
    for (std::size_t i = part.first; i < part.first + part.count; ++i) {
      const auto& tri = triangles_[i];
      out.add({t.apply(tri.a), t.apply(tri.b), t.apply(tri.c)});
    }
  }
  return out;
}

double point_triangle_distance(const Vec3& p, const Triangle& tri) {
  // Closest point on triangle by Voronoi regions.
  const Vec3 ab = tri.b - tri.a, ac = tri.c - tri.a, ap = p - tri.a;
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0 && d2 <= 0) return norm(ap);
  const Vec3 bp = p - tri.b;
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0 && d4 <= d3) return norm(bp);
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return norm(ap - ab * (d1 / (d1 - d3)));
  const Vec3 cp = p - tri.c;
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0 && d5 <= d6) return norm(cp);
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return norm(ap - ac * (d2 / (d2 - d6)));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    return norm(bp - (tri.c - tri.b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6))));
  }
  const double denom = 1.0 / (va + vb + vc);
  const Vec3 closest = tri.a + ab * (vb * denom) + ac * (vc * denom);
  return distance(p, closest);
}

double Mesh::distance_to(const Vec3& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& tri : triangles_) best = std::min(best, point_triangle_distance(p, tri));
  return best;
}

void add_box(Mesh& mesh, const Vec3& c, const Vec3& h) {
  mesh.begin_part();
  Vec3 v[8];
  for (int i = 0; i < 8; ++i) {
    v[i] = {c.x + ((i & 1) ? h.x : -h.x), c.y + ((i & 2) ? h.y : -h.y),
            c.z + ((i & 4) ? h.z : -h.z)};
  }
  const int faces[6][4] = {{0, 2, 6, 4}, {1, 5, 7, 3}, {0, 4, 5, 1},
                           {2, 3, 7, 6}, {0, 1, 3, 2}, {4, 6, 7, 5}};
  for (const auto& f : faces) {
    mesh.add({v[f[0]], v[f[1]], v[f[2]]});
    mesh.add({v[f[0]], v[f[2]], v[f[3]]});
  }
}

void add_frustum(Mesh& mesh, const Vec3& base, double r0, double r1, double height,
                 std::size_t segments, bool capped) {
  mesh.begin_part();
  const Vec3 top = base + Vec3{0, height, 0};
  auto ring = [&](const Vec3& c, double r, std::size_t i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i % segments) /
                     static_cast<double>(segments);
    return c + Vec3{r * std::cos(a), 0.0, r * std::sin(a)};
  };
  for (std::size_t i = 0; i < segments; ++i) {
    const Vec3 b0 = ring(base, r0, i), b1 = ring(base, r0, i + 1);
    const Vec3 t0 = ring(top, r1, i), t1 = ring(top, r1, i + 1);
    mesh.add({b0, t0, b1});
    mesh.add({b1, t0, t1});
    if (capped) {
      if (r0 > 0) mesh.add({base, b1, b0});
      if (r1 > 0) mesh.add({top, t0, t1});
    }
  }
}

void add_ellipsoid(Mesh& mesh, const Vec3& c, const Vec3& r, std::size_t stacks,
                   std::size_t slices) {
  mesh.begin_part();
  auto vertex = [&](std::size_t i, std::size_t j) {
    const double theta = std::numbers::pi * static_cast<double>(i) / static_cast<double>(stacks);
    const double phi = 2.0 * std::numbers::pi * static_cast<double>(j % slices) /
                       static_cast<double>(slices);
    return c + Vec3{r.x * std::sin(theta) * std::cos(phi), r.y * std::cos(theta),
                    r.z * std::sin(theta) * std::sin(phi)};
  };
  for (std::size_t i = 0; i < stacks; ++i) {
    for (std::size_t j = 0; j < slices; ++j) {
      const Vec3 a = vertex(i, j), b = vertex(i + 1, j), d = vertex(i, j + 1),
                 e = vertex(i + 1, j + 1);
      if (i != 0) mesh.add({a, b, d});
      if (i + 1 != stacks) mesh.add({d, b, e});
    }
  }
}

}  // namespace upcc
