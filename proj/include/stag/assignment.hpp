#pragma once

// Rectangular linear assignment (Hungarian method with potentials, O(n^2 m)).

#include "stag/types.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace stag {

using Matching = std::vector<std::pair<int, int>>;

namespace detail {

// Rows <= cols. Returns the column assigned to each row.
template <typename Scalar>
std::vector<int> hungarian(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  std::vector<Scalar> u(n + 1, Scalar(0)), v(m + 1, Scalar(0));
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<Scalar> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      Scalar delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const Scalar cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

template <typename Scalar>
Matching full_rectangular(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& cost) {
  Matching out;
  if (cost.rows() <= cost.cols()) {
    const auto cols = hungarian<Scalar>(cost);
    for (int r = 0; r < static_cast<int>(cols.size()); ++r) out.emplace_back(r, cols[r]);
  } else {
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> t = cost.transpose();
    const auto rows = hungarian<Scalar>(t);
    for (int c = 0; c < static_cast<int>(rows.size()); ++c) out.emplace_back(rows[c], c);
    std::sort(out.begin(), out.end());
  }
  return out;
}

}  // namespace detail

/// Minimum-cost one-to-one matching.
///
/// With an infinite `max_cost` every row (or every column, whichever side is
/// smaller) is matched. With a finite `max_cost` a row or column may stay
/// unmatched: leaving a pair unmatched is charged `max_cost`, so a pair is only
/// used when that lowers the total, and no returned pair exceeds `max_cost`.
/// Pairs come back sorted by row.
template <typename Derived>
Matching solve_assignment(
    const Eigen::MatrixBase<Derived>& cost,
    typename Derived::Scalar max_cost = std::numeric_limits<typename Derived::Scalar>::infinity()) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  if (rows == 0 || cols == 0) return {};
  if (!cost.allFinite()) throw Error("solve_assignment: cost matrix has non-finite entries");

  if (std::isinf(max_cost)) {
    if (max_cost < 0) return {};
    return detail::full_rectangular<Scalar>(cost.eval());
  }

  // Augment to (rows+cols)^2: dummy columns absorb unmatched rows and dummy
  // rows absorb unmatched columns, each at half the gate, so a real pair is
  // preferred exactly when its cost is below max_cost.
  Scalar magnitude = std::abs(max_cost);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (cost(r, c) <= max_cost) magnitude += std::abs(cost(r, c));
  const Scalar forbidden = Scalar(2) * magnitude + Scalar(1);
  const Scalar half = max_cost / Scalar(2);

  const int n = rows + cols;
  Matrix aug = Matrix::Constant(n, n, forbidden);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (cost(r, c) <= max_cost) aug(r, c) = cost(r, c);
  for (int r = 0; r < rows; ++r) aug(r, cols + r) = half;
  for (int c = 0; c < cols; ++c) aug(rows + c, c) = half;
  aug.bottomRightCorner(cols, rows).setZero();

  const auto assigned = detail::hungarian<Scalar>(aug);
  Matching out;
  for (int r = 0; r < rows; ++r) {
    const int c = assigned[r];
    if (c < cols && cost(r, c) <= max_cost) out.emplace_back(r, c);
  }
  return out;
}

/// Sum of `cost` over the matched pairs.
template <typename Derived>
typename Derived::Scalar matching_cost(const Eigen::MatrixBase<Derived>& cost, const Matching& m) {
  typename Derived::Scalar total(0);
  for (const auto& [r, c] : m) total += cost(r, c);
  return total;
}

}  // namespace stag
