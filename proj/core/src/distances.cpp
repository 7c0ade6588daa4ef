#include "upcc/distances.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "upcc/error.hpp"

namespace upcc {

namespace {

void require_nonempty(const PointSet& a, const PointSet& b, const char* op) {
  if (a.empty() || b.empty()) throw InvalidArgument(std::string(op) + ": empty point set");
}

void require_same_size(const PointSet& a, const PointSet& b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("emd: size mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  }
  require_nonempty(a, b, "emd");
}

std::vector<double> distance_matrix(const PointSet& a, const PointSet& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<double> d(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) d[i * m + j] = distance(a[i], b[j]);
  }
  return d;
}

}  // namespace

Assignment emd(const PointSet& a, const PointSet& b, AssignmentMethod method) {
  require_same_size(a, b);
  const std::size_t n = a.size();
  const auto cost = distance_matrix(a, b);
  auto sol = solve_assignment(cost, n, method);
  Assignment out;
  out.mapping = std::move(sol.column_of_row);
  out.cost = sol.total_cost / static_cast<double>(n);
  out.certified_gap = sol.certified_gap;
  return out;
}

EmdWithGrad emd_with_grad(const PointSet& a, const PointSet& b) {
  EmdWithGrad out;
  out.assignment = emd(a, b);
  const std::size_t n = a.size();
  out.grad_a.assign(n, Vec3{});
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 diff = a[i] - b[out.assignment.mapping[i]];
    const double len = norm(diff);
    if (len > 0.0) out.grad_a[i] = diff * (inv_n / len);
  }
  return out;
}

std::vector<Vec3> emd_grad(const PointSet& a, const PointSet& b) {
  return emd_with_grad(a, b).grad_a;
}

std::vector<double> nearest_distances(const PointSet& from, const PointSet& to) {
  require_nonempty(from, to, "nearest_distances");
  std::vector<double> out(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) best = std::min(best, squared_distance(from[i], q));
    out[i] = std::sqrt(best);
  }
  return out;
}

double chamfer(const PointSet& a, const PointSet& b) {
  require_nonempty(a, b, "chamfer");
  auto directed = [](const PointSet& from, const PointSet& to) {
    double sum = 0.0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) best = std::min(best, squared_distance(p, q));
      sum += best;
    }
    return sum / static_cast<double>(from.size());
  };
  return directed(a, b) + directed(b, a);
}

double hausdorff_directed(const PointSet& s, const PointSet& r) {
  require_nonempty(s, r, "hausdorff_directed");
  const auto d = nearest_distances(s, r);
  return *std::max_element(d.begin(), d.end());
}

double hausdorff_symmetric(const PointSet& a, const PointSet& b) {
  return std::max(hausdorff_directed(a, b), hausdorff_directed(b, a));
}

SoftHausdorff hausdorff_directed_grad(const PointSet& s, const PointSet& r, double tau) {
  require_nonempty(s, r, "hausdorff_directed_grad");
  if (!(tau > 0.0)) throw InvalidArgument("soft Hausdorff temperature must be positive");
  const std::size_t ns = s.size(), nr = r.size();
  const auto d = distance_matrix(s, r);

  // Soft-min over r for every s_i, keeping the normalized weights q_ij.
  std::vector<double> q(ns * nr), soft_min(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    const double* row = d.data() + i * nr;
    const double lo = *std::min_element(row, row + nr);
    double z = 0.0;
    for (std::size_t j = 0; j < nr; ++j) {
      q[i * nr + j] = std::exp(-(row[j] - lo) / tau);
      z += q[i * nr + j];
    }
    for (std::size_t j = 0; j < nr; ++j) q[i * nr + j] /= z;
    soft_min[i] = lo - tau * std::log(z);
  }

  // Soft-max over s with weights w_i.
  const double hi = *std::max_element(soft_min.begin(), soft_min.end());
  std::vector<double> w(ns);
  double z = 0.0;
  for (std::size_t i = 0; i < ns; ++i) {
    w[i] = std::exp((soft_min[i] - hi) / tau);
    z += w[i];
  }
  for (auto& wi : w) wi /= z;

  SoftHausdorff out;
  out.value = hi + tau * std::log(z);
  out.grad_r.assign(nr, Vec3{});
  for (std::size_t i = 0; i < ns; ++i) {
    for (std::size_t j = 0; j < nr; ++j) {
      const double dij = d[i * nr + j];
      if (dij <= 0.0) continue;
      const double coeff = w[i] * q[i * nr + j] / dij;
      out.grad_r[j] += (r[j] - s[i]) * coeff;
    }
  }
  return out;
}

double soft_hausdorff_directed(const PointSet& s, const PointSet& r, double tau) {
  return hausdorff_directed_grad(s, r, tau).value;
}

}  // namespace upcc
