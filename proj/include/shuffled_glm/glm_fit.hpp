// Maximum-likelihood coefficient fitting at a fixed permutation: damped
// Newton ascent on the concave per-column objective.
#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "shuffled_glm/common.hpp"
#include "shuffled_glm/glm_family.hpp"
#include "shuffled_glm/likelihood.hpp"
#include "shuffled_glm/permutation.hpp"

namespace shuffled_glm {

struct NewtonSettings {
  int max_iterations = 100;
  double gradient_tolerance = 1e-8;  // on the sup-norm of the gradient
  int damping = 30;                  // step-halving limit
  double ridge = 1e-10;
};

struct ColumnFit {
  Vector b;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool separation_suspected = false;  // curvature collapsed without convergence
  bool dropped_empty = false;         // no observed entries in the column
};

namespace detail {

inline double column_objective(const GlmFamily& family, const Vector& eta, const Vector& y,
                               const Vector& w) {
  double f = 0.0;
  for (int i = 0; i < eta.size(); ++i) {
    if (w[i] == 0.0) continue;
    f += w[i] * (y[i] * eta[i] - family.psi(eta[i]));
  }
  return f;
}

}  // namespace detail

// Maximizes sum_i w_i { y_i x_i^T b - psi(x_i^T b) }. Steps solve
// (X^T D X + ridge I) s = g with D = diag(w_i psi''(eta_i)) and are halved
// until the objective does not decrease, so the iteration is monotone.
inline ColumnFit fit_column(const GlmFamily& family, const Matrix& X, const Vector& y,
                            const Vector& weights, const NewtonSettings& settings,
                            const Vector* initial = nullptr) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (y.size() != n || weights.size() != n)
    throw ShapeMismatch("fit_column: y/weights length != rows of X");
  if ((weights.array() != 0.0).count() == 0)
    throw DomainError("fit_column: no rows with positive weight");

  ColumnFit fit;
  fit.b = (initial && initial->size() == p) ? *initial : Vector::Zero(p);

  Vector eta = X * fit.b;
  double obj = detail::column_objective(family, eta, y, weights);

  for (fit.iterations = 0; fit.iterations < settings.max_iterations; ++fit.iterations) {
    Vector mu(n), d(n);
    for (int i = 0; i < n; ++i) {
      mu[i] = family.psi_prime(eta[i]);
      d[i] = weights[i] * family.psi_double_prime(eta[i]);
    }
    const Vector g = X.transpose() * (weights.cwiseProduct(y - mu));
    fit.gradient_norm = g.lpNorm<Eigen::Infinity>();
    if (fit.gradient_norm <= settings.gradient_tolerance) break;

    Matrix H = X.transpose() * d.asDiagonal() * X;
    if (fit.iterations == 0) {
      // rank probe before the ridge masks an exactly singular design
      Eigen::LDLT<Matrix> probe(H);
      const Vector pivots = probe.vectorD();
      const double pmax = pivots.cwiseAbs().maxCoeff();
      if (probe.info() != Eigen::Success || !(pmax > 0.0) ||
          pivots.minCoeff() <= 1e-12 * pmax)
        throw SingularHessian("fit_column: Hessian numerically singular (rank-deficient design?)");
    }
    H.diagonal().array() += settings.ridge;
    Eigen::LDLT<Matrix> ldlt(H);
    if (ldlt.info() != Eigen::Success)
      throw SingularHessian("fit_column: Hessian factorization failed");
    const Vector step = ldlt.solve(g);

    double t = 1.0;
    bool accepted = false;
    for (int half = 0; half <= settings.damping; ++half) {
      const Vector b_try = fit.b + t * step;
      const Vector eta_try = X * b_try;
      const double obj_try = detail::column_objective(family, eta_try, y, weights);
      if (std::isfinite(obj_try) && obj_try >= obj) {
        fit.b = b_try;
        eta = eta_try;
        obj = obj_try;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no ascent even after full damping
  }

  Vector mu(n);
  double max_curvature = 0.0;
  for (int i = 0; i < n; ++i) {
    mu[i] = family.psi_prime(eta[i]);
    max_curvature = std::max(max_curvature, weights[i] * family.psi_double_prime(eta[i]));
  }
  fit.gradient_norm =
      (X.transpose() * (weights.cwiseProduct(y - mu))).lpNorm<Eigen::Infinity>();
  // A divergent MLE (e.g. separated Bernoulli data) drives every psi''
  // toward zero, and the gradient with it; a vanishing gradient alone is
  // therefore not evidence of an interior optimum.
  fit.separation_suspected = max_curvature < 1e-6;
  fit.converged =
      fit.gradient_norm <= settings.gradient_tolerance && !fit.separation_suspected;
  return fit;
}

struct MatrixFit {
  Coefficients B;
  std::vector<ColumnFit> columns;

  bool all_converged() const {
    for (const auto& c : columns)
      if (!c.converged && !c.dropped_empty) return false;
    return true;
  }
};

// Column-by-column fit of B with design rows reordered by perm and weights
// from the mask. Columns with no observed entries are dropped (b = 0).
inline MatrixFit fit_matrix(const GlmFamily& family, const Matrix& X, const Matrix& Y,
                            const std::optional<Matrix>& mask, const Permutation& perm,
                            const NewtonSettings& settings, const Coefficients* initial = nullptr) {
  if (Y.rows() != X.rows()) throw ShapeMismatch("fit_matrix: X and Y row counts differ");
  if (mask && (mask->rows() != Y.rows() || mask->cols() != Y.cols()))
    throw ShapeMismatch("fit_matrix: mask shape differs from Y");
  const int m = static_cast<int>(Y.cols());
  const Matrix Xp = apply_rows(perm, X);

  MatrixFit out;
  out.B = Matrix::Zero(X.cols(), m);
  out.columns.resize(m);
  std::vector<std::string> errors(m);

  parallel_for(m, [&](int l) {
    const Vector w = mask ? Vector(mask->col(l)) : Vector(Vector::Ones(Y.rows()));
    if ((w.array() != 0.0).count() == 0) {
      out.columns[l].b = Vector::Zero(X.cols());
      out.columns[l].dropped_empty = true;
      out.columns[l].converged = true;
      return;
    }
    const Vector b0 = initial ? Vector(initial->col(l)) : Vector();
    try {
      out.columns[l] =
          fit_column(family, Xp, Y.col(l), w, settings, initial ? &b0 : nullptr);
    } catch (const std::exception& e) {
      errors[l] = e.what();
      return;
    }
    out.B.col(l) = out.columns[l].b;
  });

  for (int l = 0; l < m; ++l) {
    if (!errors[l].empty())
      throw SingularHessian("fit_matrix: column " + std::to_string(l) + ": " + errors[l]);
  }
  return out;
}

// Population analogue of fit_matrix: the responses are replaced by their
// means psi'(lambda_truth), so the objective's gradient vanishes exactly
// at B(perm) and B(truth_perm) == truth_B.
inline Coefficients population_fit(const GlmFamily& family, const Matrix& X,
                                   const Permutation& perm, const Permutation& truth_perm,
                                   const Coefficients& truth_B, const NewtonSettings& settings) {
  if (truth_B.rows() != X.cols()) throw ShapeMismatch("population_fit: X cols != truth_B rows");
  const Matrix LambdaTruth = apply_rows(truth_perm, X) * truth_B;
  const Matrix Ybar =
      LambdaTruth.unaryExpr([&](double x) { return family.psi_prime(x); });
  return fit_matrix(family, X, Ybar, std::nullopt, perm, settings).B;
}

}  // namespace shuffled_glm
