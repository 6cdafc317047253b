// End-to-end estimators: known-coefficient recovery, two-step estimation,
// spectral warm start, alternating maximum likelihood and the
// missing-observation variants.
#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "shuffled_glm/assignment.hpp"
#include "shuffled_glm/common.hpp"
#include "shuffled_glm/glm_fit.hpp"
#include "shuffled_glm/likelihood.hpp"
#include "shuffled_glm/permutation.hpp"
#include "shuffled_glm/soft_impute.hpp"

namespace shuffled_glm {

struct EstimatorSettings {
  NewtonSettings newton;
  double rel_tolerance = 1e-9;  // relative likelihood improvement cutoff
  int max_outer = 50;           // alternating sweeps
  ImputeSettings impute;        // warm start completion (masked data only)
};

struct FitReport {
  Permutation perm_hat;
  Coefficients B_hat;
  std::vector<double> likelihood_trace;  // after each full sweep; non-decreasing
  int outer_iterations = 0;
  bool converged = false;
  std::optional<Permutation> warm_start_perm;
  std::vector<std::string> warnings;
};

// argmax_Pi L(Pi, B_true) via one exact assignment solve.
inline Permutation recover_known_B(const LikelihoodContext& ctx, const Coefficients& B_true) {
  return solve_min(cost_matrix(ctx, B_true)).perm;
}

namespace detail {

inline void collect_column_warnings(const MatrixFit& fit, std::vector<std::string>& warnings) {
  for (std::size_t l = 0; l < fit.columns.size(); ++l) {
    if (fit.columns[l].dropped_empty)
      warnings.push_back("response column " + std::to_string(l) +
                         " has no observed entries; dropped from the likelihood");
    else if (fit.columns[l].separation_suspected)
      warnings.push_back("response column " + std::to_string(l) +
                         " did not converge; separation suspected");
  }
}

}  // namespace detail

// Fit B at the identity permutation, then re-assign rows once.
inline FitReport two_step(const LikelihoodContext& ctx, const EstimatorSettings& settings = {}) {
  const Permutation id = Permutation::identity(static_cast<int>(ctx.X.rows()));
  const MatrixFit fit = fit_matrix(ctx.family, ctx.X, ctx.Y, ctx.mask, id, settings.newton);
  FitReport report;
  report.B_hat = fit.B;
  report.likelihood_trace.push_back(log_likelihood(ctx, id, fit.B));
  report.perm_hat = solve_min(cost_matrix(ctx, fit.B)).perm;
  report.likelihood_trace.push_back(log_likelihood(ctx, report.perm_hat, fit.B));
  report.outer_iterations = 1;
  report.converged = fit.all_converged();
  detail::collect_column_warnings(fit, report.warnings);
  return report;
}

namespace detail {

// Y_psi = (psi')^{-1}(Y + 1) entrywise. The Bernoulli mean map has range
// (0,1), so its responses are shifted to (Y + 1)/3 in {1/3, 2/3} instead,
// which preserves order. Unobserved entries are left at zero for the
// completion step to fill.
inline Matrix warm_start_transform(const GlmFamily& family, const Matrix& Y,
                                   const std::optional<Matrix>& mask) {
  const bool bernoulli = family.name == "bernoulli";
  Matrix out = Matrix::Zero(Y.rows(), Y.cols());
  for (int i = 0; i < Y.rows(); ++i) {
    for (int l = 0; l < Y.cols(); ++l) {
      if (mask && (*mask)(i, l) == 0.0) continue;
      const double shifted = bernoulli ? (Y(i, l) + 1.0) / 3.0 : Y(i, l) + 1.0;
      out(i, l) = family.psi_prime_inverse(shifted);
    }
  }
  return out;
}

}  // namespace detail

// Spectral warm start: Pi_ini = argmax_Pi <Pi, Y_psi Y_psi^T X X^T> with
// Y_psi completed by soft_impute when a mask is present.
inline Permutation warm_start(const LikelihoodContext& ctx, const ImputeSettings& impute = {}) {
  Matrix Ypsi = detail::warm_start_transform(ctx.family, ctx.Y, ctx.mask);
  const bool any_missing = ctx.mask && (ctx.mask->array() == 0.0).any();
  if (any_missing) Ypsi = soft_impute(Ypsi, *ctx.mask, impute);
  const Matrix C = Ypsi * Ypsi.transpose() * (ctx.X * ctx.X.transpose());
  return solve_max(C).perm;
}

// Alternating maximization from a given initial permutation: B-step by
// warm-started Newton ascent, Pi-step by an exact assignment solve. A
// candidate produced by either step is kept only if the canonical
// likelihood does not decrease, so the recorded trace is non-decreasing.
// Stops when Pi repeats, the relative improvement falls below
// rel_tolerance, or after max_outer sweeps.
inline FitReport ml_estimate(const LikelihoodContext& ctx, const Permutation& init,
                             const EstimatorSettings& settings = {}) {
  if (init.size() != ctx.X.rows()) throw ShapeMismatch("ml_estimate: init length != n");
  FitReport report;
  report.perm_hat = init;
  report.B_hat = Matrix::Zero(ctx.X.cols(), ctx.Y.cols());
  bool have_B = false;

  for (int sweep = 0; sweep < settings.max_outer; ++sweep) {
    report.outer_iterations = sweep + 1;

    const MatrixFit fit =
        fit_matrix(ctx.family, ctx.X, ctx.Y, ctx.mask, report.perm_hat, settings.newton,
                   have_B ? &report.B_hat : nullptr);
    if (!have_B ||
        log_likelihood(ctx, report.perm_hat, fit.B) >=
            log_likelihood(ctx, report.perm_hat, report.B_hat)) {
      report.B_hat = fit.B;
      if (report.warnings.empty()) detail::collect_column_warnings(fit, report.warnings);
    }
    have_B = true;

    const Permutation candidate = solve_min(cost_matrix(ctx, report.B_hat)).perm;
    const bool improved_perm =
        log_likelihood(ctx, candidate, report.B_hat) >=
        log_likelihood(ctx, report.perm_hat, report.B_hat);
    const Permutation prev = report.perm_hat;
    if (improved_perm) report.perm_hat = candidate;

    const double L = log_likelihood(ctx, report.perm_hat, report.B_hat);
    report.likelihood_trace.push_back(L);

    if (report.perm_hat == prev) {
      // the B-step just ran at this permutation, so it is a joint fixed point
      report.converged = true;
      break;
    }
    if (sweep > 0) {
      const double prev_L = report.likelihood_trace[sweep - 1];
      if (std::abs(L - prev_L) <= settings.rel_tolerance * (1.0 + std::abs(L))) {
        report.converged = true;
        break;
      }
    }
  }
  return report;
}

// Missing-observation pipeline: soft-impute-backed warm start followed by
// masked alternating maximization.
inline FitReport ml_estimate_missing(const LikelihoodContext& ctx,
                                     const EstimatorSettings& settings = {}) {
  if (!ctx.mask) throw DomainError("ml_estimate_missing: context has no observation mask");
  const Permutation init = warm_start(ctx, settings.impute);
  FitReport report = ml_estimate(ctx, init, settings);
  report.warm_start_perm = init;
  return report;
}

}  // namespace shuffled_glm
