// Linear-model baselines: biconvex ADMM over permutation matrices and the
// two sorting initializers (response averaging and principal eigenvector).
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "shuffled_glm/assignment.hpp"
#include "shuffled_glm/common.hpp"
#include "shuffled_glm/permutation.hpp"

namespace shuffled_glm {

struct AdmmSettings {
  double rho = 1.0;
  int max_iterations = 200;
  std::optional<Permutation> init;  // defaults to identity
};

struct AdmmResult {
  Permutation perm;
  int iterations = 0;
  bool converged = false;
};

// min -trace(Pi_1 P_X Pi_2^T Y Y^T) s.t. Pi_1 = Pi_2, split via scaled-dual
// ADMM. Both Pi-updates are linear in the permutation matrix, so each is
// solved exactly as an assignment problem; the loop stops as soon as
// Pi_1 == Pi_2.
inline AdmmResult admm_recover(const Matrix& X, const Matrix& Y, const AdmmSettings& settings = {}) {
  const int n = static_cast<int>(X.rows());
  if (Y.rows() != n) throw ShapeMismatch("admm_recover: X and Y row counts differ");
  Eigen::FullPivLU<Matrix> xtx(X.transpose() * X);
  if (!xtx.isInvertible()) throw RankDeficient("admm_recover: X^T X is singular");
  const Matrix P = X * xtx.solve(X.transpose());  // symmetric projector onto col(X)
  const Matrix YYt = Y * Y.transpose();

  Permutation pi1 = settings.init ? *settings.init : Permutation::identity(n);
  Permutation pi2 = pi1;
  Matrix mu = Matrix::Zero(n, n);

  AdmmResult out;
  for (int t = 0; t < settings.max_iterations; ++t) {
    out.iterations = t + 1;
    // both subproblems carry the negated trace term of the split objective
    const Matrix G1 = -YYt * apply_rows(pi2, P) + mu - settings.rho * to_matrix(pi2);
    pi1 = solve_max(-G1).perm;
    const Matrix G2 = -YYt * apply_rows(pi1, P) - mu - settings.rho * to_matrix(pi1);
    pi2 = solve_max(-G2).perm;
    mu += settings.rho * (to_matrix(pi1) - to_matrix(pi2));
    if (pi1 == pi2) {
      out.converged = true;
      break;
    }
  }
  out.perm = pi1;
  return out;
}

namespace detail {

inline std::vector<int> stable_argsort(const Vector& v) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
  return idx;
}

inline bool is_constant(const Vector& v) {
  return v.size() == 0 || v.maxCoeff() - v.minCoeff() == 0.0;
}

// Maximizer of <u, Pi x>^2 over permutations: by the rearrangement
// inequality the extremes of the inner product pair co-sorted and
// anti-sorted orders, so only those two matchings are compared. Fully
// degenerate inputs (either vector constant) tie across all permutations
// and resolve to the identity.
inline Permutation sort_match_squared(const Vector& u, const Vector& x) {
  const int n = static_cast<int>(u.size());
  if (is_constant(u) || is_constant(x)) return Permutation::identity(n);
  const std::vector<int> iu = stable_argsort(u);
  const std::vector<int> ix = stable_argsort(x);
  std::vector<int> asc(n), desc(n);
  for (int k = 0; k < n; ++k) {
    asc[iu[k]] = ix[k];
    desc[iu[k]] = ix[n - 1 - k];
  }
  double val_asc = 0.0, val_desc = 0.0;
  for (int i = 0; i < n; ++i) {
    val_asc += u[i] * x[asc[i]];
    val_desc += u[i] * x[desc[i]];
  }
  if (val_asc * val_asc >= val_desc * val_desc) return Permutation(asc);
  return Permutation(desc);
}

}  // namespace detail

// Averaging initializer: match the row means of Y against x by sorting.
inline Permutation averaging_estimator(const Vector& x_summary, const Matrix& Y) {
  if (Y.rows() != x_summary.size())
    throw ShapeMismatch("averaging_estimator: Y rows != summary length");
  const Vector ybar = Y.rowwise().mean();
  return detail::sort_match_squared(ybar, x_summary);
}

struct EigenvalueEstimate {
  Permutation perm;
  bool power_converged = true;
};

// Eigenvalue initializer: sort-match the principal eigenvector of
// (1/m) Y Y^T against x. The objective is squared, so the eigenvector's
// sign is immaterial (both sort orders are tried).
inline EigenvalueEstimate eigenvalue_estimator(const Vector& x_summary, const Matrix& Y) {
  if (Y.rows() != x_summary.size())
    throw ShapeMismatch("eigenvalue_estimator: Y rows != summary length");
  const int n = static_cast<int>(Y.rows());
  const Matrix A = (Y * Y.transpose()) / static_cast<double>(Y.cols());

  EigenvalueEstimate out;
  Vector v = A * Vector::Ones(n);
  if (v.norm() == 0.0) v = Vector::Ones(n);
  v.normalize();
  bool converged = false;
  for (int it = 0; it < 1000; ++it) {
    Vector w = A * v;
    const double norm = w.norm();
    if (norm == 0.0) {
      converged = true;  // A v = 0: v is already a (degenerate) eigenvector
      break;
    }
    w /= norm;
    const bool done = (w - v).lpNorm<Eigen::Infinity>() < 1e-10;
    v = w;
    if (done) {
      converged = true;
      break;
    }
  }
  out.power_converged = converged;
  out.perm = detail::sort_match_squared(v, x_summary);
  return out;
}

enum class LinearWarmStart { averaging, eigen, best };

// Collapse X to its row means and dispatch to the chosen sorting
// estimator. `best` additionally considers the identity start (a strong
// candidate when few labels are shuffled) and keeps whichever candidate
// scores highest on the consensus objective <Pi P Pi^T, Y Y^T>; the
// mean-collapsed sorting estimates discard most of the design when p > 1,
// so selecting by the objective costs little and protects that regime.
inline Permutation warm_start_linear(const Matrix& X, const Matrix& Y, LinearWarmStart method) {
  const Vector xbar = X.rowwise().mean();
  if (method == LinearWarmStart::averaging) return averaging_estimator(xbar, Y);
  if (method == LinearWarmStart::eigen) return eigenvalue_estimator(xbar, Y).perm;

  Eigen::FullPivLU<Matrix> xtx(X.transpose() * X);
  if (!xtx.isInvertible()) throw RankDeficient("warm_start_linear: X^T X is singular");
  const Matrix P = X * xtx.solve(X.transpose());
  const Matrix YYt = Y * Y.transpose();
  const auto score = [&](const Permutation& perm) {
    // trace(Pi P Pi^T Y Y^T) = sum_{i,j} P[perm(i), perm(j)] * YYt[j, i]
    double s = 0.0;
    for (int i = 0; i < P.rows(); ++i)
      for (int j = 0; j < P.cols(); ++j) s += P(perm(i), perm(j)) * YYt(j, i);
    return s;
  };
  Permutation best_perm = Permutation::identity(static_cast<int>(X.rows()));
  double best_score = score(best_perm);
  for (const Permutation& cand :
       {averaging_estimator(xbar, Y), eigenvalue_estimator(xbar, Y).perm}) {
    const double s = score(cand);
    if (s > best_score) {
      best_score = s;
      best_perm = cand;
    }
  }
  return best_perm;
}

}  // namespace shuffled_glm
