#include "shuffled_glm/likelihood.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "shuffled_glm/glm_fit.hpp"
#include "oracles.hpp"

using namespace shuffled_glm;

namespace {

LikelihoodContext random_poisson_context(int n, int p, int m, std::mt19937_64& rng,
                                         Matrix* B_out = nullptr) {
  const Matrix X = oracle::random_matrix(n, p, rng, -0.8, 0.8);
  const Matrix B = oracle::random_matrix(p, m, rng, -0.8, 0.8);
  const Matrix Y = sample_responses(family_poisson(), X, B,
                                    oracle::random_permutation(n, rng), rng());
  if (B_out) *B_out = B;
  return make_context(family_poisson(), X, Y);
}

}  // namespace

TEST(LogLikelihood, GaussianAtZeroCoefficientsIsZero) {
  std::mt19937_64 rng(1);
  const Matrix X = oracle::random_matrix(4, 2, rng);
  const Matrix Y = oracle::random_matrix(4, 3, rng);
  const auto ctx = make_context(family_gaussian(), X, Y);
  EXPECT_EQ(log_likelihood(ctx, Permutation::identity(4), Matrix::Zero(2, 3)), 0.0);
}

TEST(LogLikelihood, AllOnesMaskBitEqualToUnmasked) {
  std::mt19937_64 rng(2);
  const Matrix X = oracle::random_matrix(6, 2, rng);
  const Matrix Y = oracle::random_matrix(6, 4, rng, 0.0, 3.0);
  const Matrix B = oracle::random_matrix(2, 4, rng);
  const auto plain = make_context(family_poisson(), X, Y);
  const auto masked = make_context(family_poisson(), X, Y, Matrix::Ones(6, 4));
  const Permutation perm = oracle::random_permutation(6, rng);
  EXPECT_EQ(log_likelihood(plain, perm, B), log_likelihood(masked, perm, B));
}

// Hand evaluation of the closed formula:
// L = 1*0.5 - e^{0.5} + 3*1 - e^{1}
TEST(LogLikelihood, PoissonHandValue) {
  Matrix X(2, 1);
  X << 1, 2;
  Matrix Y(2, 1);
  Y << 1, 3;
  Matrix b(1, 1);
  b << 0.5;
  const auto ctx = make_context(family_poisson(), X, Y);
  const double expected = 1.0 * 0.5 - std::exp(0.5) + 3.0 * 1.0 - std::exp(1.0);
  EXPECT_NEAR(log_likelihood(ctx, Permutation::identity(2), b), expected, 1e-14);
  EXPECT_NEAR(expected, -0.8670030991591732, 1e-15);
}

// Permuting Y's rows by sigma and composing the candidate accordingly
// leaves the likelihood invariant (relabeling consistency).
TEST(LogLikelihood, RelabelingConsistency) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix B;
    const auto ctx = random_poisson_context(7, 2, 3, rng, &B);
    const Permutation sigma = oracle::random_permutation(7, rng);
    const Permutation pi = oracle::random_permutation(7, rng);
    const auto relabeled =
        make_context(ctx.family, ctx.X, apply_rows(sigma, ctx.Y));
    const double a = log_likelihood(ctx, pi, B);
    const double b = log_likelihood(relabeled, compose(sigma, pi), B);
    EXPECT_NEAR(a, b, 1e-12 * (1.0 + std::abs(a)));
  }
}

TEST(CostMatrix, GaussianZeroCoefficientsGiveZeroCosts) {
  std::mt19937_64 rng(4);
  const Matrix X = oracle::random_matrix(5, 2, rng);
  const Matrix Y = oracle::random_matrix(5, 3, rng);
  const auto ctx = make_context(family_gaussian(), X, Y);
  EXPECT_EQ(cost_matrix(ctx, Matrix::Zero(2, 3)).norm(), 0.0);
}

// The assignment step on the cost matrix reproduces the exhaustive
// likelihood argmax.
TEST(CostMatrix, AssignmentReproducesLikelihoodArgmax) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix B;
    const auto ctx = trial % 2 == 0 ? random_poisson_context(5, 2, 2, rng, &B)
                                    : [&] {
                                        const Matrix X = oracle::random_matrix(5, 2, rng);
                                        const Matrix Y = oracle::random_matrix(5, 2, rng);
                                        B = oracle::random_matrix(2, 2, rng);
                                        return make_context(family_gaussian(), X, Y);
                                      }();
    const Permutation via_assignment = solve_min(cost_matrix(ctx, B)).perm;

    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> best_map;
    oracle::for_each_permutation(5, [&](const std::vector<int>& map) {
      const double L = log_likelihood(ctx, Permutation(map), B);
      if (L > best) {
        best = L;
        best_map = map;
      }
    });
    EXPECT_NEAR(log_likelihood(ctx, via_assignment, B), best, 1e-9 * (1.0 + std::abs(best)));
  }
}

// Masking one entry (j, l) changes column j of the cost matrix by exactly
// that entry's term, for every design row i.
TEST(CostMatrix, SingleMaskedEntryDelta) {
  std::mt19937_64 rng(6);
  const int n = 5, p = 2, m = 3;
  const Matrix X = oracle::random_matrix(n, p, rng);
  const Matrix Y = oracle::random_matrix(n, m, rng, 0.0, 2.0);
  const Matrix B = oracle::random_matrix(p, m, rng);
  const int j = 2, l = 1;
  Matrix mask = Matrix::Ones(n, m);
  mask(j, l) = 0.0;
  const auto full = make_context(family_poisson(), X, Y);
  const auto masked = make_context(family_poisson(), X, Y, mask);
  const Matrix C_full = cost_matrix(full, B);
  const Matrix C_masked = cost_matrix(masked, B);
  const GlmFamily fam = family_poisson();
  for (int i = 0; i < n; ++i) {
    const double lam = X.row(i) * B.col(l);
    const double term = fam.psi(lam) - Y(j, l) * lam;
    EXPECT_NEAR(C_full(i, j) - C_masked(i, j), term, 1e-10 * (1.0 + std::abs(term)));
    for (int j2 = 0; j2 < n; ++j2)
      if (j2 != j) EXPECT_NEAR(C_full(i, j2), C_masked(i, j2), 1e-12);
  }
}

TEST(PopulationLikelihood, GaussianClosedFormAtTruth) {
  std::mt19937_64 rng(7);
  const Matrix X = oracle::random_matrix(6, 2, rng);
  const Matrix B = oracle::random_matrix(2, 3, rng);
  const Permutation truth = oracle::random_permutation(6, rng);
  // at (perm, B) = truth: sum of lambda^2/2
  const Matrix Lambda = apply_rows(truth, X) * B;
  const double expected = 0.5 * Lambda.squaredNorm();
  EXPECT_NEAR(population_likelihood(family_gaussian(), X, truth, B, truth, B, 1.0), expected,
              1e-12 * (1.0 + expected));
}

TEST(PopulationLikelihood, ScalesLinearlyInObservationRate) {
  std::mt19937_64 rng(8);
  const Matrix X = oracle::random_matrix(5, 2, rng);
  const Matrix B = oracle::random_matrix(2, 2, rng);
  const Matrix B2 = oracle::random_matrix(2, 2, rng);
  const Permutation a = oracle::random_permutation(5, rng);
  const Permutation b = oracle::random_permutation(5, rng);
  const double full = population_likelihood(family_poisson(), X, a, B, b, B2, 1.0);
  EXPECT_DOUBLE_EQ(population_likelihood(family_poisson(), X, a, B, b, B2, 0.25), 0.25 * full);
  EXPECT_THROW(population_likelihood(family_poisson(), X, a, B, b, B2, 0.0), DomainError);
  EXPECT_THROW(population_likelihood(family_poisson(), X, a, B, b, B2, 1.5), DomainError);
}

// Truth maximizes the population likelihood over (permutation, fitted B):
// enumerate permutations, fit each, compare.
TEST(PopulationLikelihood, TruthIsOptimalOverFittedPermutations) {
  std::mt19937_64 rng(9);
  const int n = 5, p = 2, m = 2;
  const Matrix X = oracle::random_matrix(n, p, rng);
  const Matrix B = oracle::random_matrix(p, m, rng, -0.6, 0.6);
  const Permutation truth = oracle::random_permutation(n, rng);
  const double at_truth = population_likelihood(family_poisson(), X, truth, B, truth, B, 1.0);
  NewtonSettings settings;
  oracle::for_each_permutation(n, [&](const std::vector<int>& map) {
    const Permutation pi(map);
    const Matrix fitted = population_fit(family_poisson(), X, pi, truth, B, settings);
    const double value = population_likelihood(family_poisson(), X, pi, fitted, truth, B, 1.0);
    EXPECT_LE(value, at_truth + 1e-8 * (1.0 + std::abs(at_truth)));
  });
}

// Law of large numbers: (1/m)(L - Lambda) -> 0 at the truth, with a
// 4-sigma band from the permutation-level variance.
TEST(PopulationLikelihood, MatchesEmpiricalMeanAtTruth) {
  std::mt19937_64 rng(10);
  const int n = 12, p = 3, m = 4000;
  const Matrix X = oracle::random_matrix(n, p, rng, -0.7, 0.7);
  const Matrix B = oracle::random_matrix(p, m, rng, -0.5, 0.5);
  const Permutation truth = oracle::random_permutation(n, rng);
  const Matrix Y = sample_responses(family_poisson(), X, B, truth, 2025);
  const auto ctx = make_context(family_poisson(), X, Y);
  const double L = log_likelihood(ctx, truth, B);
  const double Lambda = population_likelihood(family_poisson(), X, truth, B, truth, B, 1.0);
  // var(L) = sum psi''(lambda_truth) * lambda^2 at the truth
  const Matrix Lam = apply_rows(truth, X) * B;
  double v = 0.0;
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < m; ++l) v += std::exp(Lam(i, l)) * Lam(i, l) * Lam(i, l);
  EXPECT_NEAR((L - Lambda) / m, 0.0, 4.0 * std::sqrt(v) / m);
}

TEST(LogLikelihood, ShapeChecks) {
  const auto ctx = make_context(family_gaussian(), Matrix::Ones(3, 2), Matrix::Ones(3, 2));
  EXPECT_THROW(log_likelihood(ctx, Permutation::identity(3), Matrix::Zero(3, 2)), ShapeMismatch);
  EXPECT_THROW(log_likelihood(ctx, Permutation::identity(4), Matrix::Zero(2, 2)), ShapeMismatch);
  EXPECT_THROW(cost_matrix(ctx, Matrix::Zero(2, 3)), ShapeMismatch);
}
