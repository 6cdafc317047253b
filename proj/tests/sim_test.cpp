#include "shuffled_glm/sim.hpp"

#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"

using namespace shuffled_glm;

TEST(GenerateDesign, CompleteEnumeratesBinaryPatterns) {
  const Matrix X = generate_design(DesignKind::complete, 4, 3, 0, 1);
  Matrix expected(4, 3);
  expected << 1, 0, 0, 1, 1, 0, 1, 0, 1, 1, 1, 1;
  EXPECT_EQ(X, expected);
  EXPECT_THROW(generate_design(DesignKind::complete, 5, 3, 0, 1), InvalidShape);
  EXPECT_THROW(generate_design(DesignKind::complete, 4, 1, 0, 1), InvalidShape);
}

TEST(GenerateDesign, GaussianColumnVariances) {
  const int n = 10000, p = 4;
  const Matrix X = generate_design(DesignKind::gaussian, n, p, 0, 7);
  for (int j = 0; j < p; ++j) {
    const double var = (X.col(j).array() - X.col(j).mean()).square().mean();
    EXPECT_NEAR(var, 1.0 / p, 4.0 * (1.0 / p) * std::sqrt(2.0 / n));
  }
}

TEST(GenerateDesign, SparseSupportsAreExactAndDistinct) {
  const int n = 60, p = 12, s = 3;
  const Matrix X = generate_design(DesignKind::sparse, n, p, s, 11);
  std::set<std::vector<int>> supports;
  for (int i = 0; i < n; ++i) {
    std::vector<int> support;
    for (int j = 0; j < p; ++j) {
      if (X(i, j) != 0.0) {
        support.push_back(j);
        EXPECT_GE(X(i, j), 0.5);
        EXPECT_LE(X(i, j), 1.5);
      }
    }
    EXPECT_EQ(static_cast<int>(support.size()), s);
    EXPECT_TRUE(supports.insert(support).second) << "duplicate support at row " << i;
  }
}

TEST(RunExperiment, DeterministicGivenSeed) {
  ExperimentSpec spec;
  spec.design = DesignKind::gaussian;
  spec.family = "gaussian";
  spec.n = 24;
  spec.p = 3;
  spec.h = 4;
  spec.estimator = EstimatorKind::two_step;
  spec.replications = 5;
  spec.base_seed = 99;
  const RecoveryCurve a = run_experiment(spec, "m", {20, 40});
  const RecoveryCurve b = run_experiment(spec, "m", {20, 40});
  EXPECT_EQ(a.success_rate, b.success_rate);
  EXPECT_EQ(a.mean_hamming, b.mean_hamming);
  EXPECT_EQ(a.stderr_rate, b.stderr_rate);
}

TEST(RunExperiment, NothingToRecoverAtZeroDisplacement) {
  ExperimentSpec spec;
  spec.design = DesignKind::gaussian;
  spec.family = "gaussian";
  spec.n = 32;
  spec.p = 6;
  spec.h = 0;
  spec.replications = 10;
  spec.base_seed = 5;
  for (EstimatorKind kind : {EstimatorKind::two_step, EstimatorKind::ml}) {
    spec.estimator = kind;
    const RecoveryCurve curve = run_experiment(spec, "m", {120});
    EXPECT_EQ(curve.success_rate[0], 1.0);
    EXPECT_EQ(curve.mean_hamming[0], 0.0);
  }
}

TEST(RunExperiment, ReplicateErrorsAreCountedNotFatal) {
  ExperimentSpec spec;
  spec.design = DesignKind::gaussian;
  spec.family = "gaussian";  // real-valued responses break the log baseline
  spec.n = 16;
  spec.p = 2;
  spec.h = 4;
  spec.estimator = EstimatorKind::admm_logtrans;
  spec.replications = 4;
  spec.base_seed = 3;
  const RecoveryCurve curve = run_experiment(spec, "m", {10});
  EXPECT_EQ(curve.error_count[0], 4);
  EXPECT_EQ(curve.success_rate[0], 0.0);
}

TEST(RunExperiment, ValidatesSweepAndSpec) {
  ExperimentSpec spec;
  spec.n = 16;
  spec.p = 2;
  EXPECT_THROW(run_experiment(spec, "m", {}), ConfigError);
  EXPECT_THROW(run_experiment(spec, "bogus", {1.0}), ConfigError);
  EXPECT_THROW(run_experiment(spec, "h", {1.0}), ConfigError);  // h = 1 impossible
  spec.p = 20;  // p > n
  EXPECT_THROW(run_experiment(spec, "m", {8}), ConfigError);
}

TEST(RunExperiment, HFracRoundsAwayFromOne) {
  ExperimentSpec spec;
  spec.design = DesignKind::gaussian;
  spec.family = "gaussian";
  spec.n = 24;
  spec.p = 3;
  spec.m = 40;
  spec.estimator = EstimatorKind::two_step;
  spec.replications = 2;
  // 0.05 * 24 = 1.2 rounds to 1, which no permutation realizes; bumped to 2
  const RecoveryCurve curve = run_experiment(spec, "h_frac", {0.05});
  EXPECT_EQ(curve.error_count[0], 0);
}

TEST(MisspecificationBaselines, PairedCurvesShareSchema) {
  ExperimentSpec spec;
  spec.design = DesignKind::gaussian;
  spec.family = "poisson";
  spec.n = 24;
  spec.p = 3;
  spec.h = 6;
  spec.replications = 3;
  spec.base_seed = 17;
  const BaselineCurves curves = misspecification_baselines(spec, "m", {20, 40});
  for (const RecoveryCurve* c : {&curves.ml, &curves.linear, &curves.logtrans}) {
    ASSERT_EQ(c->grid.size(), 2u);
    for (double r : c->success_rate) {
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, 1.0);
    }
  }
  EXPECT_EQ(curves.logtrans.error_count[0], 0);  // Poisson data: log1p is fine
}
