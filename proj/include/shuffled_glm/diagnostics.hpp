// Closed-form recovery diagnostics: pairwise information gaps and
// variances, recovery-bound evaluation, permutation-level variances, KL
// divergences between permuted models, the Fano lower bound and the
// displaced-block projection gap.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "shuffled_glm/common.hpp"
#include "shuffled_glm/glm_family.hpp"
#include "shuffled_glm/likelihood.hpp"
#include "shuffled_glm/permutation.hpp"

namespace shuffled_glm {

struct PairwiseDiagnostics {
  Matrix delta;     // delta(i,j): expected likelihood advantage of row i over row j
  Matrix variance;  // v(i,j): variance of the row-likelihood contrast
  double bound = 0.0;  // n^2 * max_{i != j} exp{-delta^2 / (16 v)}
};

namespace detail {

// Failure term with the 0/0 conventions: identical rows (v = 0, delta = 0)
// count as 1, deterministic separation (v = 0, delta > 0) as 0.
inline double failure_term(double delta, double v) {
  if (v == 0.0) return delta > 0.0 ? 0.0 : 1.0;
  return std::exp(-delta * delta / (16.0 * v));
}

inline double max_failure_term(const Matrix& delta, const Matrix& v) {
  double worst = 0.0;
  for (int i = 0; i < delta.rows(); ++i)
    for (int j = 0; j < delta.cols(); ++j)
      if (i != j) worst = std::max(worst, failure_term(delta(i, j), v(i, j)));
  return worst;
}

}  // namespace detail

// delta_ij = sum_l { psi'(l_i)(l_i - l_j) - psi(l_i) + psi(l_j) }  (>= 0)
// v_ij     = sum_l psi''(l_i) (l_i - l_j)^2
// with l_i = x_i^T B_true; the bound is n^2 max_{i != j} exp{-d^2/(16 v)}.
inline PairwiseDiagnostics pairwise(const GlmFamily& family, const Matrix& X,
                                    const Coefficients& B_true) {
  if (B_true.rows() != X.cols()) throw ShapeMismatch("pairwise: X cols != B rows");
  const int n = static_cast<int>(X.rows());
  const int m = static_cast<int>(B_true.cols());
  const Matrix Lambda = X * B_true;
  Matrix P1(n, m), P2(n, m), Psi(n, m);
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < m; ++l) {
      P1(i, l) = family.psi_prime(Lambda(i, l));
      P2(i, l) = family.psi_double_prime(Lambda(i, l));
      Psi(i, l) = family.psi(Lambda(i, l));
    }
  }
  PairwiseDiagnostics out;
  out.delta = Matrix::Zero(n, n);
  out.variance = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double d = 0.0, v = 0.0;
      for (int l = 0; l < m; ++l) {
        const double diff = Lambda(i, l) - Lambda(j, l);
        d += P1(i, l) * diff - Psi(i, l) + Psi(j, l);
        v += P2(i, l) * diff * diff;
      }
      out.delta(i, j) = d;
      out.variance(i, j) = v;
    }
  }
  out.bound = static_cast<double>(n) * n * detail::max_failure_term(out.delta, out.variance);
  return out;
}

// Missing-observation analogue at observation rate q:
//   delta_ij(q) = q delta_ij
//   v_ij(q) = q v_ij + q(1-q) sum_l (psi'(l_i)(l_i - l_j) - psi(l_i) + psi(l_j))^2.
// q = 1 reproduces pairwise() bitwise.
inline PairwiseDiagnostics pairwise_missing(const GlmFamily& family, const Matrix& X,
                                            const Coefficients& B_true, double q) {
  if (!(q > 0.0 && q <= 1.0)) throw DomainError("pairwise_missing: q must be in (0,1]");
  PairwiseDiagnostics out = pairwise(family, X, B_true);
  const int n = static_cast<int>(X.rows());
  const int m = static_cast<int>(B_true.cols());
  const Matrix Lambda = X * B_true;
  Matrix P1(n, m), Psi(n, m);
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < m; ++l) {
      P1(i, l) = family.psi_prime(Lambda(i, l));
      Psi(i, l) = family.psi(Lambda(i, l));
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double corr = 0.0;
      for (int l = 0; l < m; ++l) {
        const double t = P1(i, l) * (Lambda(i, l) - Lambda(j, l)) - Psi(i, l) + Psi(j, l);
        corr += t * t;
      }
      out.delta(i, j) = q * out.delta(i, j);
      out.variance(i, j) = q * out.variance(i, j) + q * (1.0 - q) * corr;
    }
  }
  out.bound = static_cast<double>(n) * n * detail::max_failure_term(out.delta, out.variance);
  return out;
}

struct PermutationVariances {
  double v_perm_b = 0.0;   // variance of L(perm, B) under the true model
  double v_partial = 0.0;  // contribution of rows displaced relative to truth
  double v_min = 0.0;      // minimum pairwise variance over i != j
};

// The three permutation-level variance scalars at observation rate q;
// q = 1 recovers the fully observed definitions. psi-derivatives are
// evaluated at the true natural parameters (truth_perm, truth_B); the
// squared linear components come from the candidate (perm, B) for
// v_perm_b and from the truth for v_partial / v_min.
inline PermutationVariances permutation_variances(const GlmFamily& family, const Matrix& X,
                                                  const Coefficients& B, const Permutation& perm,
                                                  const Permutation& truth_perm,
                                                  const Coefficients& truth_B, double q = 1.0) {
  if (!(q > 0.0 && q <= 1.0)) throw DomainError("permutation_variances: q must be in (0,1]");
  if (B.rows() != X.cols() || truth_B.rows() != X.cols() || B.cols() != truth_B.cols())
    throw ShapeMismatch("permutation_variances: coefficient shapes");
  if (perm.size() != X.rows() || truth_perm.size() != X.rows())
    throw ShapeMismatch("permutation_variances: permutation length != n");

  const int n = static_cast<int>(X.rows());
  const int m = static_cast<int>(B.cols());
  const Matrix Lambda = X * B;
  const Matrix LambdaTruth = X * truth_B;

  PermutationVariances out;
  for (int i = 0; i < n; ++i) {
    const int it = truth_perm(i);
    const int ic = perm(i);
    for (int l = 0; l < m; ++l) {
      const double lt = LambdaTruth(it, l);
      const double lc = Lambda(ic, l);
      out.v_perm_b += q * family.psi_double_prime(lt) * lc * lc;
      if (q < 1.0) {
        const double mean_term = family.psi_prime(lt) * lc - family.psi(lc);
        out.v_perm_b += q * (1.0 - q) * mean_term * mean_term;
      }
    }
    if (ic != it) {
      for (int l = 0; l < m; ++l) {
        const double a = LambdaTruth(it, l);
        const double b = LambdaTruth(ic, l);
        out.v_partial += q * family.psi_double_prime(a) * (b - a) * (b - a);
        if (q < 1.0) {
          const double t = family.psi_prime(a) * (b - a) - family.psi(b) + family.psi(a);
          out.v_partial += q * (1.0 - q) * t * t;
        }
      }
    }
  }

  bool first = true;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double v = 0.0;
      for (int l = 0; l < m; ++l) {
        const double a = LambdaTruth(i, l);
        const double b = LambdaTruth(j, l);
        v += q * family.psi_double_prime(a) * (a - b) * (a - b);
        if (q < 1.0) {
          const double t = family.psi_prime(a) * (a - b) - family.psi(a) + family.psi(b);
          v += q * (1.0 - q) * t * t;
        }
      }
      if (first || v < out.v_min) out.v_min = v;
      first = false;
    }
  }
  return out;
}

// KL(f_a || f_b) for the two permuted models sharing B_true: the per-entry
// Bregman divergence of psi summed over the response matrix,
//   sum_{i,l} { psi(l_b) - psi(l_a) - psi'(l_a)(l_b - l_a) },
// which equals Lambda_a(perm_a, B) - Lambda_a(perm_b, B) and is >= 0
// term by term.
inline double kl_between_permutations(const GlmFamily& family, const Matrix& X,
                                      const Coefficients& B_true, const Permutation& perm_a,
                                      const Permutation& perm_b) {
  if (B_true.rows() != X.cols()) throw ShapeMismatch("kl_between_permutations: X cols != B rows");
  if (perm_a.size() != X.rows() || perm_b.size() != X.rows())
    throw ShapeMismatch("kl_between_permutations: permutation length != n");
  const Matrix La = apply_rows(perm_a, X) * B_true;
  const Matrix Lb = apply_rows(perm_b, X) * B_true;
  KahanSum acc;
  for (int i = 0; i < La.rows(); ++i) {
    for (int l = 0; l < La.cols(); ++l) {
      const double a = La(i, l);
      const double b = Lb(i, l);
      const double term =
          family.psi(b) - family.psi(a) - family.psi_prime(a) * (b - a);
      acc.add(std::max(0.0, term));  // nonnegative by convexity; clamp rounding
    }
  }
  return acc.value();
}

// Fano lower bound on the worst-case error of any estimator picking among
// models whose pairwise KL divergences are at most kl_upper:
//   max(0, 1 - (kl_upper + ln 2) / ln(n_models)).
inline double fano_lower_bound(double kl_upper, long long n_models) {
  if (n_models < 2) throw DomainError("fano_lower_bound: need at least two models");
  if (kl_upper < 0.0) throw DomainError("fano_lower_bound: KL bound must be nonnegative");
  const double r = std::log(static_cast<double>(n_models));
  return std::max(0.0, 1.0 - (kl_upper + std::log(2.0)) / r);
}

struct ProjectionGap {
  Vector gaps;                 // per response column
  bool rank_deficient = false;
};

// Residual of projecting X_1 b_l off the column space of X_{Pi,1}, where
// X_1 stacks the displaced rows and X_{Pi,1} their images under perm.
// Solved column-wise by a complete orthogonal decomposition, which doubles
// as the pseudo-inverse fallback when X_{Pi,1} is rank deficient.
inline ProjectionGap projection_gap(const Matrix& X, const Coefficients& B_true,
                                    const Permutation& perm, int displaced_count) {
  if (B_true.rows() != X.cols()) throw ShapeMismatch("projection_gap: X cols != B rows");
  if (perm.size() != X.rows()) throw ShapeMismatch("projection_gap: permutation length != n");
  std::vector<int> displaced;
  for (int i = 0; i < perm.size(); ++i)
    if (perm(i) != i) displaced.push_back(i);
  if (static_cast<int>(displaced.size()) != displaced_count)
    throw DomainError("projection_gap: permutation displaces " +
                      std::to_string(displaced.size()) + " indices, not " +
                      std::to_string(displaced_count));

  ProjectionGap out;
  out.gaps = Vector::Zero(B_true.cols());
  if (displaced_count == 0) return out;

  const int h = displaced_count;
  Matrix X1(h, X.cols()), Xpi1(h, X.cols());
  for (int k = 0; k < h; ++k) {
    X1.row(k) = X.row(displaced[k]);
    Xpi1.row(k) = X.row(perm(displaced[k]));
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Xpi1);
  out.rank_deficient = cod.rank() < X.cols();
  for (int l = 0; l < B_true.cols(); ++l) {
    const Vector target = X1 * B_true.col(l);
    out.gaps[l] = (target - Xpi1 * cod.solve(target)).norm();
  }
  return out;
}

}  // namespace shuffled_glm
