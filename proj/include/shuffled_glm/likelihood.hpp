// Empirical and population log-likelihoods and the assignment cost matrix.
#pragma once

#include <optional>

#include "shuffled_glm/assignment.hpp"
#include "shuffled_glm/common.hpp"
#include "shuffled_glm/glm_family.hpp"
#include "shuffled_glm/permutation.hpp"

namespace shuffled_glm {

struct LikelihoodContext {
  GlmFamily family;
  Matrix X;
  Matrix Y;
  std::optional<Matrix> mask;
};

inline LikelihoodContext make_context(GlmFamily family, Matrix X, Matrix Y,
                                      std::optional<Matrix> mask = std::nullopt) {
  Dataset d{std::move(X), std::move(Y), std::move(mask)};
  d.validate();
  return LikelihoodContext{std::move(family), std::move(d.X), std::move(d.Y), std::move(d.mask)};
}

namespace detail {

inline void check_coefficients(const LikelihoodContext& ctx, const Coefficients& B) {
  if (B.rows() != ctx.X.cols() || B.cols() != ctx.Y.cols())
    throw ShapeMismatch("coefficients must be p x m");
  if (!B.allFinite()) throw NonFinite("coefficients have non-finite entries");
}

}  // namespace detail

// L(Pi, B) = sum_{i,l} w_il { Y[i,l]*lambda - psi(lambda) },
// lambda = x_{perm(i)}^T b_l, w_il = mask (1 when absent). Fixed row-major
// Kahan accumulation; zero-weight entries are skipped so a mask of all
// ones reproduces the unmasked value bitwise.
inline double log_likelihood(const LikelihoodContext& ctx, const Permutation& perm,
                             const Coefficients& B) {
  detail::check_coefficients(ctx, B);
  if (perm.size() != ctx.X.rows()) throw ShapeMismatch("log_likelihood: permutation length != n");
  const Matrix Lambda = apply_rows(perm, ctx.X) * B;
  KahanSum acc;
  for (int i = 0; i < Lambda.rows(); ++i) {
    for (int l = 0; l < Lambda.cols(); ++l) {
      const double w = ctx.mask ? (*ctx.mask)(i, l) : 1.0;
      if (w == 0.0) continue;
      const double lam = Lambda(i, l);
      acc.add(w * (ctx.Y(i, l) * lam - ctx.family.psi(lam)));
    }
  }
  return acc.value();
}

// C[i,j] = sum_l w_jl { psi(x_i^T b_l) - Y[j,l] * x_i^T b_l }, so that the
// tau minimizing sum_i C[tau(i), i] maximizes L(., B). The mask row
// travels with the response row j. Assembled from GEMMs:
//   C = psi(Lambda) W^T - Lambda (W o Y)^T,  Lambda = X B.
inline CostMatrix cost_matrix(const LikelihoodContext& ctx, const Coefficients& B) {
  detail::check_coefficients(ctx, B);
  const Matrix Lambda = ctx.X * B;
  const Matrix Psi = Lambda.unaryExpr([&](double x) { return ctx.family.psi(x); });
  if (ctx.mask) {
    return Psi * ctx.mask->transpose() - Lambda * ctx.mask->cwiseProduct(ctx.Y).transpose();
  }
  const Vector row_psi = Psi.rowwise().sum();
  return row_psi.replicate(1, ctx.Y.rows()) - Lambda * ctx.Y.transpose();
}

// Population likelihood (expectation of L over Y and the mask):
//   Lambda(Pi, B, q) = q * sum_{i,l} { -psi(lam) + psi'(lam_truth) * lam }.
inline double population_likelihood(const GlmFamily& family, const Matrix& X,
                                    const Permutation& perm, const Coefficients& B,
                                    const Permutation& truth_perm, const Coefficients& truth_B,
                                    double observe_rate = 1.0) {
  if (!(observe_rate > 0.0 && observe_rate <= 1.0))
    throw DomainError("population_likelihood: observe rate must be in (0,1]");
  if (B.rows() != X.cols() || truth_B.rows() != X.cols() || B.cols() != truth_B.cols())
    throw ShapeMismatch("population_likelihood: coefficient shapes");
  if (perm.size() != X.rows() || truth_perm.size() != X.rows())
    throw ShapeMismatch("population_likelihood: permutation length != n");
  const Matrix Lambda = apply_rows(perm, X) * B;
  const Matrix LambdaTruth = apply_rows(truth_perm, X) * truth_B;
  KahanSum acc;
  for (int i = 0; i < Lambda.rows(); ++i) {
    for (int l = 0; l < Lambda.cols(); ++l) {
      const double lam = Lambda(i, l);
      acc.add(-family.psi(lam) + family.psi_prime(LambdaTruth(i, l)) * lam);
    }
  }
  return observe_rate * acc.value();
}

}  // namespace shuffled_glm
