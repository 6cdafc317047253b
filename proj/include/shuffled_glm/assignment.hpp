// Exact linear assignment (Kuhn-Munkres, O(n^3) shortest augmenting paths)
// with deterministic lexicographic tie-breaking.
#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "shuffled_glm/common.hpp"
#include "shuffled_glm/permutation.hpp"

namespace shuffled_glm {

// Square all-finite cost matrix C (n x n).
using CostMatrix = Matrix;

struct AssignmentResult {
  Permutation perm;
  double value = 0.0;
};

namespace detail {

struct LapSolution {
  std::vector<int> row_to_col;
  std::vector<double> u, v;  // potentials: D(i,j) - u[i] - v[j] >= 0, = 0 on matched edges
};

// Row-by-row shortest-augmenting-path Hungarian; minimizes sum_i D(i, sigma(i)).
inline LapSolution lap_min_rowwise(const Matrix& D) {
  const int n = static_cast<int>(D.rows());
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = D(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  LapSolution sol;
  sol.row_to_col.assign(n, -1);
  for (int j = 1; j <= n; ++j) sol.row_to_col[match[j] - 1] = j - 1;
  sol.u.assign(u.begin() + 1, u.end());
  sol.v.assign(v.begin() + 1, v.end());
  return sol;
}

// Every optimal assignment is a perfect matching in the graph of tight
// edges (complementary slackness). Greedily fixes, row by row, the
// smallest column that still extends to a perfect matching there, which
// yields the lexicographically smallest optimal assignment. Skipped when
// the tight graph has no edges beyond the matched ones.
inline void lex_refine(const Matrix& D, LapSolution& sol) {
  const int n = static_cast<int>(D.rows());
  const double eps = 1e-12 * (1.0 + D.cwiseAbs().maxCoeff());

  std::vector<std::vector<int>> tight(n);
  std::size_t edges = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == sol.row_to_col[i] || D(i, j) - sol.u[i] - sol.v[j] <= eps) tight[i].push_back(j);
    }
    edges += tight[i].size();
  }
  if (edges == static_cast<std::size_t>(n)) return;  // unique tight support

  std::vector<int> col_of = sol.row_to_col;
  std::vector<int> row_of(n, -1);
  for (int i = 0; i < n; ++i) row_of[col_of[i]] = i;
  std::vector<char> fixed_col(n, 0);
  std::vector<char> visited(n, 0);

  std::function<bool(int)> try_row = [&](int r) -> bool {
    for (int j : tight[r]) {
      if (fixed_col[j] || visited[j]) continue;
      visited[j] = 1;
      if (row_of[j] == -1 || try_row(row_of[j])) {
        row_of[j] = r;
        col_of[r] = j;
        return true;
      }
    }
    return false;
  };

  for (int i = 0; i < n; ++i) {
    for (int j : tight[i]) {
      if (fixed_col[j]) continue;
      if (j == col_of[i]) break;
      const int displaced = row_of[j];
      const int old = col_of[i];
      row_of[old] = -1;
      row_of[j] = i;
      col_of[i] = j;
      std::fill(visited.begin(), visited.end(), 0);
      visited[j] = 1;
      if (try_row(displaced)) break;
      row_of[j] = displaced;
      col_of[i] = old;
      row_of[old] = i;
    }
    fixed_col[col_of[i]] = 1;
  }
  sol.row_to_col = col_of;
}

inline void check_cost_matrix(const Matrix& C) {
  if (C.rows() < 1 || C.rows() != C.cols())
    throw InvalidShape("assignment: cost matrix must be square and non-empty");
  if (!C.allFinite()) throw NonFinite("assignment: cost matrix has NaN or infinite entries");
}

}  // namespace detail

// Returns tau minimizing sum_i C[tau(i), i] over bijections, with ties
// broken toward the lexicographically smallest tau.
inline AssignmentResult solve_min(const CostMatrix& C) {
  detail::check_cost_matrix(C);
  const Matrix D = C.transpose();
  detail::LapSolution sol = detail::lap_min_rowwise(D);
  detail::lex_refine(D, sol);
  AssignmentResult out;
  out.perm = Permutation(sol.row_to_col);
  for (int i = 0; i < C.rows(); ++i) out.value += C(out.perm(i), i);
  return out;
}

// Returns Pi maximizing <Pi, C> = sum_i C[i, map(i)], ties toward the
// lexicographically smallest map.
inline AssignmentResult solve_max(const CostMatrix& C) {
  detail::check_cost_matrix(C);
  const Matrix D = -C;
  detail::LapSolution sol = detail::lap_min_rowwise(D);
  detail::lex_refine(D, sol);
  AssignmentResult out;
  out.perm = Permutation(sol.row_to_col);
  for (int i = 0; i < C.rows(); ++i) out.value += C(i, out.perm(i));
  return out;
}

}  // namespace shuffled_glm
