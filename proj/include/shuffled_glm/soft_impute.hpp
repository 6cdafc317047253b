// Nuclear-norm matrix completion by iterated soft-thresholded SVD.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "shuffled_glm/common.hpp"

namespace shuffled_glm {

struct ImputeSettings {
  // lambda < 0 selects the default 0.1 * sigma_1 of the zero-filled input;
  // max_rank < 1 selects min(n, m, 20).
  double lambda = -1.0;
  int max_rank = -1;
  int max_iterations = 300;
  double rel_tolerance = 1e-6;
};

inline double soft_impute_objective(const Matrix& Y_obs, const Matrix& mask, const Matrix& M,
                                    double lambda);

// Iterates M <- SVT(P_obs(Y) + P_miss(M), lambda) until the relative
// Frobenius change drops below rel_tolerance. The objective
//   1/2 ||P_obs(Y - M)||_F^2 + lambda ||M||_*
// is non-increasing along the iteration; the fixed point is returned.
// objective_trace, when given, collects the objective after every sweep.
inline Matrix soft_impute(const Matrix& Y_obs, const Matrix& mask, ImputeSettings settings,
                          std::vector<double>* objective_trace = nullptr) {
  if (mask.rows() != Y_obs.rows() || mask.cols() != Y_obs.cols())
    throw ShapeMismatch("soft_impute: mask shape differs from Y");
  for (int i = 0; i < mask.rows(); ++i)
    for (int l = 0; l < mask.cols(); ++l)
      if (mask(i, l) != 0.0 && mask(i, l) != 1.0)
        throw DomainError("soft_impute: mask entries must be 0 or 1");
  if (mask.sum() == 0.0) throw EmptyMask("soft_impute: no observed entries");

  const Matrix Z = mask.cwiseProduct(Y_obs);  // zero-filled observations
  if (settings.lambda < 0.0) {
    Eigen::BDCSVD<Matrix> svd(Z);
    settings.lambda = 0.1 * svd.singularValues()[0];
  }
  if (settings.max_rank < 1)
    settings.max_rank = static_cast<int>(std::min<Eigen::Index>(
        std::min(Y_obs.rows(), Y_obs.cols()), 20));

  Matrix M = Matrix::Zero(Y_obs.rows(), Y_obs.cols());
  for (int it = 0; it < settings.max_iterations; ++it) {
    const Matrix W = Z + (Matrix::Ones(mask.rows(), mask.cols()) - mask).cwiseProduct(M);
    Eigen::BDCSVD<Matrix> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vector sigma = svd.singularValues();
    const int rank = std::min<int>(settings.max_rank, static_cast<int>(sigma.size()));
    Matrix M_next = Matrix::Zero(Y_obs.rows(), Y_obs.cols());
    for (int k = 0; k < rank; ++k) {
      const double s = std::max(0.0, sigma[k] - settings.lambda);
      if (s == 0.0) break;  // singular values are sorted
      M_next += s * svd.matrixU().col(k) * svd.matrixV().col(k).transpose();
    }
    const double change = (M_next - M).norm();
    const double scale = std::max(1.0, M.norm());
    M = M_next;
    if (objective_trace)
      objective_trace->push_back(soft_impute_objective(Y_obs, mask, M, settings.lambda));
    if (change <= settings.rel_tolerance * scale) break;
  }
  return M;
}

// Completion objective; exposed so callers can assert monotonicity.
inline double soft_impute_objective(const Matrix& Y_obs, const Matrix& mask, const Matrix& M,
                                    double lambda) {
  const double fit = 0.5 * mask.cwiseProduct(Y_obs - M).squaredNorm();
  Eigen::BDCSVD<Matrix> svd(M);
  return fit + lambda * svd.singularValues().sum();
}

}  // namespace shuffled_glm
