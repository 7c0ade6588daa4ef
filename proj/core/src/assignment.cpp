#include "upcc/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "upcc/error.hpp"

namespace upcc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

AssignmentSolution hungarian(std::span<const double> cost, std::size_t n) {
  // 1-based arrays; column 0 is the virtual source of each augmenting path.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> row_of_col(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = row_of_col[j0];
      const double* row = cost.data() + (i0 - 1) * n;
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  AssignmentSolution sol;
  sol.column_of_row.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) sol.column_of_row[row_of_col[j] - 1] = j - 1;
  for (std::size_t i = 0; i < n; ++i) sol.total_cost += cost[i * n + sol.column_of_row[i]];
  return sol;
}

// Auction on benefits b_ij = -c_ij. Prices persist across epsilon phases.
AssignmentSolution auction(std::span<const double> cost, std::size_t n, double final_epsilon) {
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  double cmax = 0.0;
  for (double c : cost) cmax = std::max(cmax, std::abs(c));
  std::vector<double> price(n, 0.0);
  std::vector<std::size_t> col_of_row(n, kNone), row_of_col(n, kNone);
  double eps = std::max(cmax / 4.0, final_epsilon);
  std::vector<std::size_t> queue;
  queue.reserve(n);
  while (true) {
    std::fill(col_of_row.begin(), col_of_row.end(), kNone);
    std::fill(row_of_col.begin(), row_of_col.end(), kNone);
    queue.clear();
    for (std::size_t i = n; i-- > 0;) queue.push_back(i);
    while (!queue.empty()) {
      const std::size_t i = queue.back();
      queue.pop_back();
      const double* row = cost.data() + i * n;
      double best = -kInf, second = -kInf;
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double value = -row[j] - price[j];
        if (value > best) {
          second = best;
          best = value;
          best_j = j;
        } else if (value > second) {
          second = value;
        }
      }
      const double increment = (n == 1 ? 0.0 : best - second) + eps;
      price[best_j] += increment;
      const std::size_t evicted = row_of_col[best_j];
      row_of_col[best_j] = i;
      col_of_row[i] = best_j;
      if (evicted != kNone) {
        col_of_row[evicted] = kNone;
        queue.push_back(evicted);
      }
    }
    if (eps <= final_epsilon) break;
    eps = std::max(eps / 5.0, final_epsilon);
  }
  AssignmentSolution sol;
  sol.column_of_row = col_of_row;
  for (std::size_t i = 0; i < n; ++i) sol.total_cost += cost[i * n + col_of_row[i]];
  // Dual of the benefit-maximization problem: sum_i max_j (b_ij - p_j) + sum_j p_j.
  double dual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = -kInf;
    const double* row = cost.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) best = std::max(best, -row[j] - price[j]);
    dual += best;
  }
  for (double p : price) dual += p;
  sol.certified_gap = std::max(0.0, sol.total_cost + dual);
  return sol;
}

}  // namespace

AssignmentSolution solve_assignment(std::span<const double> cost, std::size_t n,
                                    AssignmentMethod method, double final_epsilon) {
  if (cost.size() != n * n) {
    throw InvalidArgument("assignment: cost matrix has " + std::to_string(cost.size()) +
                          " entries, expected " + std::to_string(n * n));
  }
  if (n == 0) return {};
  for (double c : cost) {
    if (!std::isfinite(c)) throw NumericError("assignment: non-finite cost");
  }
  if (method == AssignmentMethod::Auto) {
    method = n <= kExactAssignmentLimit ? AssignmentMethod::Hungarian : AssignmentMethod::Auction;
  }
  if (method == AssignmentMethod::Hungarian) return hungarian(cost, n);
  if (!(final_epsilon > 0.0)) throw InvalidArgument("auction: final epsilon must be positive");
  return auction(cost, n, final_epsilon);
}

}  // namespace upcc
