// Minimum-cost rectangular assignment (Hungarian / Kuhn-Munkres with
// potentials), with a lexicographic tie-break among optimal assignments.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "svs/core.hpp"

namespace svs {

/// Dense row-major cost matrix.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  CostMatrix(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    for (const auto& row : init) {
      if (row.size() != cols_) throw ValidationError("CostMatrix: ragged initializer");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using Assignment = std::vector<std::pair<std::size_t, std::size_t>>;

namespace detail {

/// Optimal assignment of every row when rows <= cols. Returns col per row.
inline std::vector<std::size_t> hungarian_rows_le_cols(const CostMatrix& a) {
  const std::size_t n = a.rows(), m = a.cols();
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; p[j] = row matched to column j (0 = none).
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
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
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> col_of(n, 0);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) col_of[p[j] - 1] = j - 1;
  return col_of;
}

/// Optimal cost over the given rows/cols with min(|rows|, |cols|) pairs.
inline double optimal_cost(const CostMatrix& cost, const std::vector<std::size_t>& rows,
                           const std::vector<std::size_t>& cols) {
  if (rows.empty() || cols.empty()) return 0.0;
  const bool transpose = rows.size() > cols.size();
  const auto& rr = transpose ? cols : rows;
  const auto& cc = transpose ? rows : cols;
  CostMatrix sub(rr.size(), cc.size());
  for (std::size_t i = 0; i < rr.size(); ++i)
    for (std::size_t j = 0; j < cc.size(); ++j)
      sub(i, j) = transpose ? cost(cc[j], rr[i]) : cost(rr[i], cc[j]);
  const auto col_of = hungarian_rows_le_cols(sub);
  double total = 0.0;
  for (std::size_t i = 0; i < rr.size(); ++i) total += sub(i, col_of[i]);
  return total;
}

}  // namespace detail

inline double assignment_cost(const CostMatrix& cost, const Assignment& a) {
  double total = 0.0;
  for (const auto& [r, c] : a) total += cost(r, c);
  return total;
}

/// Minimum-cost one-to-one assignment covering min(rows, cols) pairs. Among
/// optimal assignments (costs equal within 1e-9 relative) the one whose
/// sorted (row, col) list is lexicographically smallest is returned.
inline Assignment hungarian(const CostMatrix& cost) {
  const std::size_t R = cost.rows(), C = cost.cols();
  Assignment out;
  if (R == 0 || C == 0) return out;
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c)
      if (!std::isfinite(cost(r, c))) throw ValidationError("hungarian: non-finite cost");

  std::vector<std::size_t> all_rows(R), all_cols(C);
  for (std::size_t i = 0; i < R; ++i) all_rows[i] = i;
  for (std::size_t j = 0; j < C; ++j) all_cols[j] = j;
  const double best = detail::optimal_cost(cost, all_rows, all_cols);
  const std::size_t need = std::min(R, C);
  const double tol = 1e-9 * (1.0 + std::abs(best));

  // Greedy scan of pairs in lexicographic order: keep a pair iff an optimal
  // completion still exists on the rows after it and the unused columns.
  double fixed_cost = 0.0;
  std::vector<bool> col_used(C, false);
  for (std::size_t r = 0; r < R && out.size() < need; ++r) {
    for (std::size_t c = 0; c < C; ++c) {
      if (col_used[c]) continue;
      std::vector<std::size_t> rest_rows, rest_cols;
      for (std::size_t i = r + 1; i < R; ++i) rest_rows.push_back(i);
      for (std::size_t j = 0; j < C; ++j)
        if (!col_used[j] && j != c) rest_cols.push_back(j);
      if (std::min(rest_rows.size(), rest_cols.size()) < need - out.size() - 1) continue;
      const double rest = detail::optimal_cost(cost, rest_rows, rest_cols);
      if (std::abs(fixed_cost + cost(r, c) + rest - best) <= tol) {
        out.emplace_back(r, c);
        col_used[c] = true;
        fixed_cost += cost(r, c);
        break;
      }
    }
  }
  return out;
}

}  // namespace svs
