// Simulation harness: design generators, replicated recovery experiments
// and the model-misspecification comparison.
#pragma once

#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "shuffled_glm/admm.hpp"
#include "shuffled_glm/common.hpp"
#include "shuffled_glm/estimators.hpp"
#include "shuffled_glm/glm_family.hpp"
#include "shuffled_glm/likelihood.hpp"
#include "shuffled_glm/permutation.hpp"

namespace shuffled_glm {

enum class DesignKind { gaussian, complete, sparse };
enum class EstimatorKind { known_b, two_step, ml, ml_missing, admm_linear, admm_logtrans };

inline DesignKind design_by_name(const std::string& s) {
  if (s == "gaussian_design") return DesignKind::gaussian;
  if (s == "complete_design") return DesignKind::complete;
  if (s == "sparse_design") return DesignKind::sparse;
  throw ConfigError("unknown design setting: " + s);
}

inline EstimatorKind estimator_by_name(const std::string& s) {
  if (s == "known_b") return EstimatorKind::known_b;
  if (s == "two_step") return EstimatorKind::two_step;
  if (s == "ml") return EstimatorKind::ml;
  if (s == "ml_missing") return EstimatorKind::ml_missing;
  if (s == "admm_linear") return EstimatorKind::admm_linear;
  if (s == "admm_logtrans") return EstimatorKind::admm_logtrans;
  throw ConfigError("unknown estimator: " + s);
}

struct ExperimentSpec {
  DesignKind design = DesignKind::gaussian;
  std::string family = "poisson";
  int n = 256;
  int p = 10;
  int m = 80;
  int sparse_s = 5;       // nonzeros per row of a sparse design
  int h = 0;              // displaced labels (0 or >= 2)
  double q = 1.0;         // observation rate
  EstimatorKind estimator = EstimatorKind::ml;
  int replications = 50;
  std::uint64_t base_seed = 1;
  EstimatorSettings est;
  AdmmSettings admm;
  LinearWarmStart admm_warm_start = LinearWarmStart::best;

  void validate() const {
    if (n < 1 || p < 1 || m < 1) throw ConfigError("experiment: n, p, m must be positive");
    if (n < p) throw ConfigError("experiment: requires n >= p (model unidentifiable otherwise)");
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError("experiment: q must be in (0,1]");
    if (h == 1 || h < 0 || h > n) throw ConfigError("experiment: h must be 0 or in [2, n]");
    if (replications < 1) throw ConfigError("experiment: replications must be positive");
  }
};

struct RecoveryCurve {
  std::vector<double> grid;
  std::vector<double> success_rate;
  std::vector<double> stderr_rate;     // binomial standard error of the success rate
  std::vector<double> mean_hamming;    // mean d(perm_hat, perm_true) / n
  std::vector<int> error_count;        // replicates that raised instead of estimating
};

// Gaussian: rows i.i.d. N(0, I_p / p). Complete: intercept plus all binary
// patterns over the remaining columns (requires n == 2^{p-1}). Sparse:
// exactly sparse_s nonzeros per row at distinct uniform positions, values
// i.i.d. U(0.5, 1.5), supports distinct across rows (by rejection).
inline Matrix generate_design(DesignKind kind, int n, int p, int sparse_s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  switch (kind) {
    case DesignKind::gaussian: {
      std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(p)));
      Matrix X(n, p);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) X(i, j) = gauss(rng);
      return X;
    }
    case DesignKind::complete: {
      if (p < 2 || n != (1 << (p - 1)))
        throw InvalidShape("complete design requires n == 2^(p-1)");
      Matrix X = Matrix::Zero(n, p);
      for (int i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (int k = 0; k < p - 1; ++k) X(i, 1 + k) = (i >> k) & 1;
      }
      return X;
    }
    case DesignKind::sparse: {
      if (sparse_s < 1 || sparse_s > p) throw InvalidShape("sparse design: s must be in [1, p]");
      std::uniform_real_distribution<double> value(0.5, 1.5);
      Matrix X = Matrix::Zero(n, p);
      std::set<std::vector<int>> supports;
      for (int i = 0; i < n; ++i) {
        std::vector<int> cols(p);
        std::iota(cols.begin(), cols.end(), 0);
        std::vector<int> support;
        do {
          for (int k = 0; k < sparse_s; ++k) {
            std::uniform_int_distribution<int> pick(k, p - 1);
            std::swap(cols[k], cols[pick(rng)]);
          }
          support.assign(cols.begin(), cols.begin() + sparse_s);
          std::sort(support.begin(), support.end());
        } while (!supports.insert(support).second);
        for (int c : support) X(i, c) = value(rng);
      }
      return X;
    }
  }
  throw ConfigError("generate_design: unhandled design kind");
}

namespace detail {

// Coefficients are standard normal under the Gaussian design and
// U(0, 2) under the complete / sparse designs.
inline Coefficients generate_coefficients(DesignKind kind, int p, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix B(p, m);
  if (kind == DesignKind::gaussian) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int j = 0; j < p; ++j)
      for (int l = 0; l < m; ++l) B(j, l) = gauss(rng);
  } else {
    std::uniform_real_distribution<double> unif(0.0, 2.0);
    for (int j = 0; j < p; ++j)
      for (int l = 0; l < m; ++l) B(j, l) = unif(rng);
  }
  return B;
}

struct Replicate {
  Matrix X;
  Matrix Y;  // already masked (unobserved entries zeroed)
  std::optional<Matrix> mask;
  Coefficients B_true;
  Permutation perm_true;
};

inline Replicate generate_replicate(const ExperimentSpec& spec, std::uint64_t seed) {
  Replicate r;
  r.X = generate_design(spec.design, spec.n, spec.p, spec.sparse_s, mix_seed(seed, 1));
  r.B_true = generate_coefficients(spec.design, spec.p, spec.m, mix_seed(seed, 2));
  r.perm_true = random_with_displacement(spec.n, spec.h, mix_seed(seed, 3));
  const GlmFamily family = family_by_name(spec.family);
  r.Y = sample_responses(family, r.X, r.B_true, r.perm_true, mix_seed(seed, 4));
  if (spec.q < 1.0 || spec.estimator == EstimatorKind::ml_missing) {
    std::mt19937_64 rng(mix_seed(seed, 5));
    std::bernoulli_distribution observe(spec.q);
    Matrix mask(spec.n, spec.m);
    for (int i = 0; i < spec.n; ++i)
      for (int l = 0; l < spec.m; ++l) mask(i, l) = observe(rng) ? 1.0 : 0.0;
    r.Y = mask.cwiseProduct(r.Y);
    r.mask = std::move(mask);
  }
  return r;
}

inline Permutation run_estimator(const ExperimentSpec& spec, const Replicate& r) {
  switch (spec.estimator) {
    case EstimatorKind::known_b: {
      const auto ctx = make_context(family_by_name(spec.family), r.X, r.Y, r.mask);
      return recover_known_B(ctx, r.B_true);
    }
    case EstimatorKind::two_step: {
      const auto ctx = make_context(family_by_name(spec.family), r.X, r.Y, r.mask);
      return two_step(ctx, spec.est).perm_hat;
    }
    case EstimatorKind::ml: {
      const auto ctx = make_context(family_by_name(spec.family), r.X, r.Y, r.mask);
      if (ctx.mask) return ml_estimate_missing(ctx, spec.est).perm_hat;
      const Permutation init = warm_start(ctx, spec.est.impute);
      return ml_estimate(ctx, init, spec.est).perm_hat;
    }
    case EstimatorKind::ml_missing: {
      auto ctx = make_context(family_by_name(spec.family), r.X, r.Y, r.mask);
      if (!ctx.mask) ctx.mask = Matrix::Ones(r.Y.rows(), r.Y.cols());
      return ml_estimate_missing(ctx, spec.est).perm_hat;
    }
    case EstimatorKind::admm_linear: {
      AdmmSettings admm = spec.admm;
      admm.init = warm_start_linear(r.X, r.Y, spec.admm_warm_start);
      return admm_recover(r.X, r.Y, admm).perm;
    }
    case EstimatorKind::admm_logtrans: {
      const Matrix Ylog = r.Y.unaryExpr([](double y) {
        if (y < 0.0) throw DomainError("log-transform baseline requires nonnegative responses");
        return std::log1p(y);
      });
      AdmmSettings admm = spec.admm;
      admm.init = warm_start_linear(r.X, Ylog, spec.admm_warm_start);
      return admm_recover(r.X, Ylog, admm).perm;
    }
  }
  throw ConfigError("run_estimator: unhandled estimator kind");
}

inline ExperimentSpec with_sweep_value(const ExperimentSpec& base, const std::string& param,
                                       double value) {
  ExperimentSpec spec = base;
  if (param == "m") {
    spec.m = static_cast<int>(std::lround(value));
  } else if (param == "h") {
    spec.h = static_cast<int>(std::lround(value));
  } else if (param == "h_frac") {
    int h = static_cast<int>(std::lround(value * base.n));
    if (h == 1) h = 2;
    spec.h = h;
  } else if (param == "q") {
    spec.q = value;
  } else if (param == "p") {
    spec.p = static_cast<int>(std::lround(value));
  } else {
    throw ConfigError("unknown sweep parameter: " + param);
  }
  spec.validate();
  return spec;
}

}  // namespace detail

// Sweeps one parameter over a grid; every grid point aggregates
// `replications` independent replicates. Per-replicate seeds are derived
// from (base_seed, grid index, replicate), so the curve is a pure function
// of the spec regardless of worker scheduling. Replicates that throw are
// counted and scored as failures rather than aborting the sweep.
inline RecoveryCurve run_experiment(const ExperimentSpec& base, const std::string& sweep_param,
                                    const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("run_experiment: sweep grid is empty");
  base.validate();
  RecoveryCurve curve;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const ExperimentSpec spec = detail::with_sweep_value(base, sweep_param, grid[g]);
    const int R = spec.replications;
    std::vector<double> success(R, 0.0), ham(R, 0.0);
    std::vector<int> errors(R, 0);
    parallel_for(R, [&](int rep) {
      const std::uint64_t seed = mix_seed(spec.base_seed, g, static_cast<std::uint64_t>(rep));
      try {
        const detail::Replicate data = detail::generate_replicate(spec, seed);
        const Permutation perm_hat = detail::run_estimator(spec, data);
        success[rep] = perm_hat == data.perm_true ? 1.0 : 0.0;
        ham[rep] = static_cast<double>(hamming(perm_hat, data.perm_true)) / spec.n;
      } catch (const std::exception&) {
        errors[rep] = 1;
        success[rep] = 0.0;
        ham[rep] = 1.0;
      }
    });
    double rate = 0.0, mean_ham = 0.0;
    int error_count = 0;
    for (int rep = 0; rep < R; ++rep) {
      rate += success[rep];
      mean_ham += ham[rep];
      error_count += errors[rep];
    }
    rate /= R;
    mean_ham /= R;
    curve.grid.push_back(grid[g]);
    curve.success_rate.push_back(rate);
    curve.stderr_rate.push_back(std::sqrt(rate * (1.0 - rate) / R));
    curve.mean_hamming.push_back(mean_ham);
    curve.error_count.push_back(error_count);
  }
  return curve;
}

struct BaselineCurves {
  RecoveryCurve ml;        // correctly specified maximum likelihood
  RecoveryCurve linear;    // ADMM on the raw responses
  RecoveryCurve logtrans;  // ADMM on log(1 + Y)
};

// Fig.-3-style comparison: the same generated data per replicate is fed to
// the correctly specified ML estimator and to the two linear baselines.
inline BaselineCurves misspecification_baselines(const ExperimentSpec& base,
                                                 const std::string& sweep_param,
                                                 const std::vector<double>& grid) {
  BaselineCurves out;
  ExperimentSpec spec = base;
  spec.estimator = EstimatorKind::ml;
  out.ml = run_experiment(spec, sweep_param, grid);
  spec.estimator = EstimatorKind::admm_linear;
  out.linear = run_experiment(spec, sweep_param, grid);
  spec.estimator = EstimatorKind::admm_logtrans;
  out.logtrans = run_experiment(spec, sweep_param, grid);
  return out;
}

}  // namespace shuffled_glm
