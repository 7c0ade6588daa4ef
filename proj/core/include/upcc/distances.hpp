#pragma once

#include <cstddef>
#include <vector>

#include "upcc/assignment.hpp"
#include "upcc/point_set.hpp"

namespace upcc {

/// Optimal bijection between two equal-size point sets.
struct Assignment {
  /// mapping[i] is the index in b matched to a[i].
  std::vector<std::size_t> mapping;
  /// Mean matched Euclidean distance.
  double cost = 0.0;
  /// Upper bound on (cost - optimum) * n; zero for the exact solver.
  double certified_gap = 0.0;
};

/// Earth Mover's Distance: min over bijections of the mean matched distance.
Assignment emd(const PointSet& a, const PointSet& b,
               AssignmentMethod method = AssignmentMethod::Auto);

/// Subgradient of emd(a, b).cost with respect to the points of a, taken at
/// the optimal assignment. Coincident matched pairs contribute zero.
std::vector<Vec3> emd_grad(const PointSet& a, const PointSet& b);

struct EmdWithGrad {
  Assignment assignment;
  std::vector<Vec3> grad_a;
};
EmdWithGrad emd_with_grad(const PointSet& a, const PointSet& b);

/// Symmetric Chamfer distance with squared nearest-neighbour distances,
/// each direction averaged over its source set.
double chamfer(const PointSet& a, const PointSet& b);

/// max over s of min over r of |s - r|.
double hausdorff_directed(const PointSet& s, const PointSet& r);
double hausdorff_symmetric(const PointSet& a, const PointSet& b);

/// Smooth directed Hausdorff distance: a log-sum-exp soft-max over s of a
/// soft-min over r, both at temperature tau. Differs from the hard value by
/// at most tau * log(|s| * |r|).
struct SoftHausdorff {
  double value = 0.0;
  /// Gradient of value with respect to each point of r.
  std::vector<Vec3> grad_r;
};
inline constexpr double kDefaultSoftHausdorffTemperature = 0.01;

double soft_hausdorff_directed(const PointSet& s, const PointSet& r, double tau);
SoftHausdorff hausdorff_directed_grad(const PointSet& s, const PointSet& r,
                                      double tau = kDefaultSoftHausdorffTemperature);

/// Nearest-neighbour distance from every point of `from` to the set `to`.
std::vector<double> nearest_distances(const PointSet& from, const PointSet& to);

}  // namespace upcc
