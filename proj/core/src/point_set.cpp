#include "upcc/point_set.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "upcc/error.hpp"

namespace upcc {

namespace {

void validate(const std::vector<Vec3>& points) {
  if (points.empty()) throw InvalidArgument("point set must contain at least one point");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!is_finite(points[i])) {
      throw InvalidArgument("non-finite coordinate at point " + std::to_string(i));
    }
  }
}

}  // namespace

PointSet::PointSet(std::vector<Vec3> points) : points_(std::move(points)) { validate(points_); }

PointSet::PointSet(std::initializer_list<Vec3> points) : points_(points) { validate(points_); }

PointSet PointSet::from_flat(std::span<const double> xyz) {
  if (xyz.size() % 3 != 0) throw InvalidArgument("flat buffer length not divisible by 3");
  std::vector<Vec3> pts(xyz.size() / 3);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    pts[i] = {xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]};
  }
  return PointSet(std::move(pts));
}

std::vector<double> PointSet::flat() const {
  std::vector<double> out;
  out.reserve(points_.size() * 3);
  for (const auto& p : points_) {
    out.push_back(p.x);
    out.push_back(p.y);
    out.push_back(p.z);
  }
  return out;
}

Vec3 PointSet::centroid() const {
  Vec3 c;
  for (const auto& p : points_) c += p;
  return c / static_cast<double>(points_.size());
}

double PointSet::max_radius(const Vec3& center) const {
  double r2 = 0.0;
  for (const auto& p : points_) r2 = std::max(r2, squared_distance(p, center));
  return std::sqrt(r2);
}

Normalization unit_sphere_transform(const PointSet& set) {
  if (set.empty()) throw InvalidArgument("point set must contain at least one point");
  const Vec3 c = set.centroid();
  const double r = set.max_radius(c);
  if (!(r > 0.0)) throw InvalidArgument("zero extent");
  return {c, 1.0 / r};
}

PointSet apply(const Normalization& t, const PointSet& set) {
  std::vector<Vec3> out;
  out.reserve(set.size());
  for (const auto& p : set) out.push_back(t.apply(p));
  return PointSet(std::move(out));
}

PointSet normalize_unit_sphere(const PointSet& set) {
  PointSet once = apply(unit_sphere_transform(set), set);
  // A second pass removes the rounding left by the first, which makes the
  // operation idempotent to well below 1e-9.
  return apply(unit_sphere_transform(once), once);
}

std::vector<std::size_t> nearest_neighbors(const PointSet& set, const Vec3& query, std::size_t k) {
  const std::size_t n = set.size();
  if (k == 0 || k > n) {
    throw InvalidArgument("nearest_neighbors: k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(n) + "]");
  }
  std::vector<std::pair<double, std::size_t>> keyed(n);
  for (std::size_t i = 0; i < n; ++i) keyed[i] = {squared_distance(set[i], query), i};
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(k), keyed.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = keyed[i].second;
  return out;
}

std::vector<std::size_t> farthest_point_indices(const PointSet& set, std::size_t m,
                                                std::size_t start) {
  const std::size_t n = set.size();
  if (m > n) {
    throw InvalidArgument("downsample: m=" + std::to_string(m) + " exceeds n=" +
                          std::to_string(n));
  }
  if (start >= n) throw InvalidArgument("downsample: start index out of range");
  std::vector<std::size_t> chosen;
  chosen.reserve(m);
  if (m == 0) return chosen;
  std::vector<double> gap(n, std::numeric_limits<double>::infinity());
  std::size_t current = start;
  chosen.push_back(current);
  gap[current] = -1.0;
  while (chosen.size() < m) {
    std::size_t best = n;
    double best_gap = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (gap[i] < 0.0) continue;
      gap[i] = std::min(gap[i], squared_distance(set[i], set[current]));
      if (gap[i] > best_gap) {
        best_gap = gap[i];
        best = i;
      }
    }
    current = best;
    gap[current] = -1.0;
    chosen.push_back(current);
  }
  return chosen;
}

PointSet downsample(const PointSet& set, std::size_t m, Rng& rng) {
  if (m > set.size()) {
    throw InvalidArgument("downsample: m=" + std::to_string(m) + " exceeds n=" +
                          std::to_string(set.size()));
  }
  if (m == 0) throw InvalidArgument("downsample: m must be positive");
  const auto idx = farthest_point_indices(set, m, rng.below(set.size()));
  std::vector<Vec3> out;
  out.reserve(m);
  for (auto i : idx) out.push_back(set[i]);
  return PointSet(std::move(out));
}

PointSet duplicate_to_count(const PointSet& set, std::size_t m, Rng& rng) {
  const std::size_t n = set.size();
  if (n == 0) throw InvalidArgument("duplicate_to_count: empty input");
  if (m < n) {
    throw InvalidArgument("duplicate_to_count: m=" + std::to_string(m) + " below n=" +
                          std::to_string(n));
  }
  std::vector<Vec3> out(set.begin(), set.end());
  out.reserve(m);
  while (out.size() < m) out.push_back(set[rng.below(n)]);
  return PointSet(std::move(out));
}

PointSet permuted(const PointSet& set, std::span<const std::size_t> order) {
  if (order.size() != set.size()) throw InvalidArgument("permutation size mismatch");
  std::vector<Vec3> out(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) out[i] = set[order[i]];
  return PointSet(std::move(out));
}

PointSet translated(const PointSet& set, const Vec3& offset) {
  std::vector<Vec3> out(set.begin(), set.end());
  for (auto& p : out) p += offset;
  return PointSet(std::move(out));
}

}  // namespace upcc
