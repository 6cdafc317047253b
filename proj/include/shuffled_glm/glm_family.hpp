// Exponential-family kernels psi / psi' / psi'' plus response samplers.
#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>

#include "shuffled_glm/common.hpp"
#include "shuffled_glm/permutation.hpp"

namespace shuffled_glm {

// One-parameter exponential family with density
//   f(y) = exp{ y*lambda - psi(lambda) + c(y) },
// so psi' maps the natural parameter to the mean and psi'' to the variance.
struct GlmFamily {
  std::string name;
  std::function<double(double)> psi;
  std::function<double(double)> psi_prime;
  std::function<double(double)> psi_double_prime;
  std::function<double(double)> psi_prime_inverse;  // partial; throws DomainError off-domain
  std::function<double(double, std::mt19937_64&)> sample;
};

namespace detail {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) {
  // overflow-safe branch: softplus(1000) == 1000
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace detail

// Canonical Gaussian: psi(x) = x^2/2, unit variance, mean = lambda.
inline GlmFamily family_gaussian() {
  GlmFamily f;
  f.name = "gaussian";
  f.psi = [](double x) { return 0.5 * x * x; };
  f.psi_prime = [](double x) { return x; };
  f.psi_double_prime = [](double) { return 1.0; };
  f.psi_prime_inverse = [](double u) { return u; };
  f.sample = [](double lambda, std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, 1.0);
    return lambda + noise(rng);
  };
  return f;
}

// Gaussian with psi(x) = x^2 (mean 2*lambda, variance 2); kept for
// exactness checks against sources that use the unnormalized kernel.
inline GlmFamily family_gaussian_paper() {
  GlmFamily f;
  f.name = "gaussian-paper";
  f.psi = [](double x) { return x * x; };
  f.psi_prime = [](double x) { return 2.0 * x; };
  f.psi_double_prime = [](double) { return 2.0; };
  f.psi_prime_inverse = [](double u) { return 0.5 * u; };
  f.sample = [](double lambda, std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, 1.0);
    return 2.0 * lambda + std::sqrt(2.0) * noise(rng);
  };
  return f;
}

inline GlmFamily family_poisson() {
  GlmFamily f;
  f.name = "poisson";
  f.psi = [](double x) { return std::exp(x); };
  f.psi_prime = [](double x) { return std::exp(x); };
  f.psi_double_prime = [](double x) { return std::exp(x); };
  f.psi_prime_inverse = [](double u) {
    if (!(u > 0.0)) throw DomainError("poisson psi_prime_inverse: input must be positive");
    return std::log(u);
  };
  f.sample = [](double lambda, std::mt19937_64& rng) {
    const double rate = std::exp(lambda);
    if (!std::isfinite(rate)) throw DomainError("poisson sampler: rate exp(lambda) overflows");
    std::poisson_distribution<long long> draw(rate);
    return static_cast<double>(draw(rng));
  };
  return f;
}

inline GlmFamily family_bernoulli() {
  GlmFamily f;
  f.name = "bernoulli";
  f.psi = detail::softplus;
  f.psi_prime = detail::sigmoid;
  f.psi_double_prime = [](double x) {
    const double s = detail::sigmoid(x);
    return s * (1.0 - s);
  };
  f.psi_prime_inverse = [](double u) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("bernoulli psi_prime_inverse: input must be in (0,1)");
    return std::log(u / (1.0 - u));
  };
  f.sample = [](double lambda, std::mt19937_64& rng) {
    std::bernoulli_distribution draw(detail::sigmoid(lambda));
    return draw(rng) ? 1.0 : 0.0;
  };
  return f;
}

inline GlmFamily family_by_name(const std::string& name) {
  if (name == "gaussian") return family_gaussian();
  if (name == "gaussian-paper") return family_gaussian_paper();
  if (name == "poisson") return family_poisson();
  if (name == "bernoulli") return family_bernoulli();
  throw DomainError("unknown family: " + name);
}

// Design X (n x p), responses Y (n x m) and an optional {0,1} observation
// mask of Y's shape.
struct Dataset {
  Matrix X;
  Matrix Y;
  std::optional<Matrix> mask;

  void validate() const {
    if (X.rows() < 1 || X.cols() < 1) throw InvalidShape("Dataset: X must be non-empty");
    if (Y.cols() < 1) throw InvalidShape("Dataset: Y must have at least one column");
    if (Y.rows() != X.rows()) throw ShapeMismatch("Dataset: X and Y row counts differ");
    if (!X.allFinite() || !Y.allFinite()) throw NonFinite("Dataset: non-finite entries");
    if (mask) {
      if (mask->rows() != Y.rows() || mask->cols() != Y.cols())
        throw ShapeMismatch("Dataset: mask shape differs from Y");
      for (int i = 0; i < mask->rows(); ++i)
        for (int l = 0; l < mask->cols(); ++l)
          if ((*mask)(i, l) != 0.0 && (*mask)(i, l) != 1.0)
            throw DomainError("Dataset: mask entries must be 0 or 1");
    }
  }
};

// Draws Y*[i,l] ~ family at lambda = x_i^T b_l, then returns the
// row-permuted matrix Pi*Y*, i.e. output row i is Y* row perm(i).
// Pure function of (inputs, seed): entries are drawn row-major.
inline Matrix sample_responses(const GlmFamily& family, const Matrix& X, const Coefficients& B,
                               const Permutation& perm, std::uint64_t rng_seed) {
  if (B.rows() != X.cols()) throw ShapeMismatch("sample_responses: X cols != B rows");
  if (perm.size() != X.rows()) throw ShapeMismatch("sample_responses: permutation length != n");
  const Matrix Lambda = X * B;
  Matrix Ystar(Lambda.rows(), Lambda.cols());
  std::mt19937_64 rng(rng_seed);
  for (int i = 0; i < Lambda.rows(); ++i)
    for (int l = 0; l < Lambda.cols(); ++l) Ystar(i, l) = family.sample(Lambda(i, l), rng);
  return apply_rows(perm, Ystar);
}

}  // namespace shuffled_glm
