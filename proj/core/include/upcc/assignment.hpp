#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace upcc {

enum class AssignmentMethod { Auto, Hungarian, Auction };

/// Problems up to this size are solved exactly; larger ones by auction.
inline constexpr std::size_t kExactAssignmentLimit = 512;

struct AssignmentSolution {
  std::vector<std::size_t> column_of_row;
  double total_cost = 0.0;
  /// Primal minus dual bound. Zero (up to rounding) for the exact solver.
  double certified_gap = 0.0;
};

/// Minimum-cost perfect matching on a dense row-major n x n cost matrix.
///
/// Hungarian: shortest augmenting paths with row/column potentials, O(n^3).
/// Auction: forward auction with epsilon scaling down to `final_epsilon`;
/// the returned gap is computed from the final prices and is at most
/// n * final_epsilon.
AssignmentSolution solve_assignment(std::span<const double> cost, std::size_t n,
                                    AssignmentMethod method = AssignmentMethod::Auto,
                                    double final_epsilon = 1e-6);

}  // namespace upcc
