// Command-line front end: fit estimators on CSV data, run recovery-curve
// simulations, and emit recovery diagnostics.
//
// Exit codes: 0 success, 1 input/configuration error, 2 the estimator did
// not converge (results are still written).

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shuffled_glm/admm.hpp"
#include "shuffled_glm/diagnostics.hpp"
#include "shuffled_glm/estimators.hpp"
#include "shuffled_glm/glm_fit.hpp"
#include "shuffled_glm/io.hpp"
#include "shuffled_glm/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shuffled_glm;

namespace {

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(context + ": unknown key '" + key + "'");
  }
}

NewtonSettings parse_newton(const json& j) {
  check_keys(j, {"max_iterations", "gradient_tolerance", "damping", "ridge"}, "newton");
  NewtonSettings s;
  s.max_iterations = j.value("max_iterations", s.max_iterations);
  s.gradient_tolerance = j.value("gradient_tolerance", s.gradient_tolerance);
  s.damping = j.value("damping", s.damping);
  s.ridge = j.value("ridge", s.ridge);
  return s;
}

ImputeSettings parse_impute(const json& j) {
  check_keys(j, {"lambda", "max_rank", "max_iterations", "rel_tolerance"}, "impute");
  ImputeSettings s;
  s.lambda = j.value("lambda", s.lambda);
  s.max_rank = j.value("max_rank", s.max_rank);
  s.max_iterations = j.value("max_iterations", s.max_iterations);
  s.rel_tolerance = j.value("rel_tolerance", s.rel_tolerance);
  return s;
}

AdmmSettings parse_admm(const json& j) {
  check_keys(j, {"rho", "max_iterations"}, "admm");
  AdmmSettings s;
  s.rho = j.value("rho", s.rho);
  s.max_iterations = j.value("max_iterations", s.max_iterations);
  return s;
}

EstimatorSettings parse_estimator_settings(const json& j, const std::string& context) {
  check_keys(j, {"newton", "impute", "rel_tolerance", "max_outer", "admm"}, context);
  EstimatorSettings s;
  if (j.contains("newton")) s.newton = parse_newton(j["newton"]);
  if (j.contains("impute")) s.impute = parse_impute(j["impute"]);
  s.rel_tolerance = j.value("rel_tolerance", s.rel_tolerance);
  s.max_outer = j.value("max_outer", s.max_outer);
  return s;
}

json report_to_json(const FitReport& report, const std::string& estimator,
                    const std::string& family) {
  json j;
  j["estimator"] = estimator;
  j["family"] = family;
  j["permutation"] = permutation_to_json(report.perm_hat);
  j["likelihood_trace"] = report.likelihood_trace;
  j["outer_iterations"] = report.outer_iterations;
  j["converged"] = report.converged;
  if (report.warm_start_perm) j["warm_start"] = permutation_to_json(*report.warm_start_perm);
  j["warnings"] = report.warnings;
  return j;
}

int cmd_fit(const std::string& x_path, const std::string& y_path, const std::string& mask_path,
            const std::string& b_true_path, const std::string& family_name,
            const std::string& estimator, const std::string& config_path,
            const std::string& out_dir) {
  const Matrix X = read_csv_matrix(x_path);
  const Matrix Y = read_csv_matrix(y_path);
  std::optional<Matrix> mask;
  if (!mask_path.empty()) mask = read_csv_matrix(mask_path);

  EstimatorSettings settings;
  AdmmSettings admm;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot open " + config_path);
    const json cfg = json::parse(in);
    settings = parse_estimator_settings(cfg, "config");
    if (cfg.contains("admm")) admm = parse_admm(cfg["admm"]);
  }

  const auto ctx = make_context(family_by_name(family_name), X, Y, mask);
  FitReport report;
  if (estimator == "known-b") {
    if (b_true_path.empty()) throw ConfigError("estimator known-b requires --b-true");
    const Matrix B_true = read_csv_matrix(b_true_path);
    report.perm_hat = recover_known_B(ctx, B_true);
    report.B_hat = B_true;
    report.likelihood_trace = {log_likelihood(ctx, report.perm_hat, B_true)};
    report.outer_iterations = 1;
    report.converged = true;
  } else if (estimator == "two-step") {
    report = two_step(ctx, settings);
  } else if (estimator == "ml") {
    if (ctx.mask) {
      report = ml_estimate_missing(ctx, settings);
    } else {
      const Permutation init = warm_start(ctx, settings.impute);
      report = ml_estimate(ctx, init, settings);
      report.warm_start_perm = init;
    }
  } else if (estimator == "admm") {
    admm.init = warm_start_linear(X, Y, LinearWarmStart::best);
    const AdmmResult res = admm_recover(X, Y, admm);
    report.perm_hat = res.perm;
    report.converged = res.converged;
    report.outer_iterations = res.iterations;
    report.warm_start_perm = admm.init;
    // least-squares coefficients at the recovered ordering
    report.B_hat =
        fit_matrix(family_gaussian(), X, Y, ctx.mask, res.perm, settings.newton).B;
    report.likelihood_trace = {
        log_likelihood(make_context(family_gaussian(), X, Y, ctx.mask), res.perm, report.B_hat)};
  } else {
    throw ConfigError("unknown estimator: " + estimator +
                      " (expected known-b|two-step|ml|admm)");
  }

  fs::create_directories(out_dir);
  write_permutation_csv((fs::path(out_dir) / "permutation.csv").string(), report.perm_hat);
  write_csv_matrix((fs::path(out_dir) / "b_hat.csv").string(), report.B_hat);
  std::ofstream out(fs::path(out_dir) / "report.json");
  out << report_to_json(report, estimator, family_name).dump(2) << "\n";
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  return report.converged ? 0 : 2;
}

ExperimentSpec parse_experiment(const json& cfg, std::string* sweep_param,
                                std::vector<double>* grid) {
  check_keys(cfg,
             {"setting", "family", "n", "p", "m", "sparse_s", "h", "q", "estimator",
              "replications", "base_seed", "sweep", "newton", "impute", "admm",
              "rel_tolerance", "max_outer", "admm_warm_start"},
             "config");
  ExperimentSpec spec;
  spec.design = design_by_name(cfg.value("setting", "gaussian_design"));
  spec.family = cfg.value("family", spec.family);
  spec.n = cfg.value("n", spec.n);
  spec.p = cfg.value("p", spec.p);
  spec.m = cfg.value("m", spec.m);
  spec.sparse_s = cfg.value("sparse_s", spec.sparse_s);
  spec.h = cfg.value("h", spec.h);
  spec.q = cfg.value("q", spec.q);
  if (cfg.contains("estimator") && cfg["estimator"] != "misspec_baselines")
    spec.estimator = estimator_by_name(cfg["estimator"]);
  spec.replications = cfg.value("replications", spec.replications);
  spec.base_seed = cfg.value("base_seed", spec.base_seed);
  if (cfg.contains("newton")) spec.est.newton = parse_newton(cfg["newton"]);
  if (cfg.contains("impute")) spec.est.impute = parse_impute(cfg["impute"]);
  spec.est.rel_tolerance = cfg.value("rel_tolerance", spec.est.rel_tolerance);
  spec.est.max_outer = cfg.value("max_outer", spec.est.max_outer);
  if (cfg.contains("admm")) spec.admm = parse_admm(cfg["admm"]);
  if (cfg.contains("admm_warm_start")) {
    const std::string ws = cfg["admm_warm_start"];
    if (ws == "averaging")
      spec.admm_warm_start = LinearWarmStart::averaging;
    else if (ws == "eigen")
      spec.admm_warm_start = LinearWarmStart::eigen;
    else if (ws == "best")
      spec.admm_warm_start = LinearWarmStart::best;
    else
      throw ConfigError("admm_warm_start must be averaging|eigen|best");
  }

  if (!cfg.contains("sweep")) throw ConfigError("config: missing 'sweep'");
  check_keys(cfg["sweep"], {"parameter", "grid"}, "sweep");
  if (!cfg["sweep"].contains("parameter") || !cfg["sweep"].contains("grid"))
    throw ConfigError("sweep: requires 'parameter' and 'grid'");
  *sweep_param = cfg["sweep"]["parameter"];
  *grid = cfg["sweep"]["grid"].get<std::vector<double>>();
  return spec;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, bool plot,
                 std::optional<std::uint64_t> seed_override) {
  std::ifstream in(config_path);
  if (!in) throw IoError("cannot open " + config_path);
  const json cfg = json::parse(in);

  std::string sweep_param;
  std::vector<double> grid;
  ExperimentSpec spec = parse_experiment(cfg, &sweep_param, &grid);
  if (seed_override) spec.base_seed = *seed_override;
  fs::create_directories(out_dir);

  if (cfg.value("estimator", "") == "misspec_baselines") {
    const BaselineCurves curves = misspecification_baselines(spec, sweep_param, grid);
    write_curve_csv((fs::path(out_dir) / "curve_ml.csv").string(), curves.ml);
    write_curve_csv((fs::path(out_dir) / "curve_linear.csv").string(), curves.linear);
    write_curve_csv((fs::path(out_dir) / "curve_logtrans.csv").string(), curves.logtrans);
    if (plot)
      write_curve_svg((fs::path(out_dir) / "curves.svg").string(),
                      {{"ml", curves.ml}, {"linear", curves.linear},
                       {"log-trans", curves.logtrans}});
  } else {
    const RecoveryCurve curve = run_experiment(spec, sweep_param, grid);
    write_curve_csv((fs::path(out_dir) / "curve.csv").string(), curve);
    if (plot)
      write_curve_svg((fs::path(out_dir) / "curve.svg").string(),
                      {{cfg.value("estimator", "ml"), curve}});
    int errors = 0;
    for (int e : curve.error_count) errors += e;
    if (errors > 0) std::cerr << "warning: " << errors << " replicates raised errors\n";
  }
  return 0;
}

json summary_stats(const Matrix& M) {
  std::vector<double> off;
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j)
      if (i != j) off.push_back(M(i, j));
  std::sort(off.begin(), off.end());
  json j;
  j["min"] = off.front();
  j["median"] = off[off.size() / 2];
  j["max"] = off.back();
  return j;
}

int cmd_diagnose(const std::string& x_path, const std::string& b_path,
                 const std::string& family_name, std::optional<double> q,
                 const std::string& out_dir) {
  const Matrix X = read_csv_matrix(x_path);
  const Matrix B = read_csv_matrix(b_path);
  const GlmFamily family = family_by_name(family_name);
  const PairwiseDiagnostics diag = pairwise(family, X, B);

  json j;
  j["n"] = X.rows();
  j["m"] = B.cols();
  j["family"] = family_name;
  j["delta"] = summary_stats(diag.delta);
  j["variance"] = summary_stats(diag.variance);
  j["theorem_bound"] = diag.bound;
  j["bound_exceeds_0.05"] = diag.bound > 0.05;
  if (q) {
    const PairwiseDiagnostics masked = pairwise_missing(family, X, B, *q);
    json m;
    m["q"] = *q;
    m["delta"] = summary_stats(masked.delta);
    m["variance"] = summary_stats(masked.variance);
    m["theorem_bound"] = masked.bound;
    m["bound_exceeds_0.05"] = masked.bound > 0.05;
    j["masked"] = m;
  }
  fs::create_directories(out_dir);
  std::ofstream out(fs::path(out_dir) / "diagnostics.json");
  out << j.dump(2) << "\n";
  if (diag.bound > 0.05)
    std::cerr << "warning: recovery failure bound " << diag.bound << " exceeds 0.05\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shuffled-response GLM estimation, simulation and diagnostics"};
  app.require_subcommand(1);

  std::string x_path, y_path, mask_path, b_true_path, config_path;
  std::string family = "gaussian";
  std::string estimator = "ml";
  std::string out_dir = ".";
  bool plot = false;
  std::optional<double> q;
  std::optional<std::uint64_t> seed;

  auto* fit = app.add_subcommand("fit", "Estimate the permutation and coefficients from CSVs");
  fit->add_option("--x", x_path, "design matrix CSV")->required();
  fit->add_option("--y", y_path, "response matrix CSV")->required();
  fit->add_option("--mask", mask_path, "0/1 observation mask CSV");
  fit->add_option("--b-true", b_true_path, "known coefficient matrix CSV (estimator known-b)");
  fit->add_option("--family", family, "gaussian|poisson|bernoulli|gaussian-paper");
  fit->add_option("--estimator", estimator, "known-b|two-step|ml|admm");
  fit->add_option("--config", config_path, "JSON settings (newton/impute/admm)");
  fit->add_option("--out", out_dir, "output directory");

  auto* sim = app.add_subcommand("simulate", "Run a replicated recovery-curve experiment");
  sim->add_option("--config", config_path, "experiment JSON")->required();
  sim->add_option("--out", out_dir, "output directory");
  sim->add_flag("--plot", plot, "also emit an SVG plot");
  sim->add_option("--seed", seed, "override the config's base seed");

  auto* diag = app.add_subcommand("diagnose", "Evaluate recovery diagnostics for a design");
  diag->add_option("--x", x_path, "design matrix CSV")->required();
  diag->add_option("--b", b_true_path, "coefficient matrix CSV")->required();
  diag->add_option("--family", family, "gaussian|poisson|bernoulli|gaussian-paper");
  diag->add_option("--q", q, "observation rate for the masked diagnostics");
  diag->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed())
      return cmd_fit(x_path, y_path, mask_path, b_true_path, family, estimator, config_path,
                     out_dir);
    if (sim->parsed()) return cmd_simulate(config_path, out_dir, plot, seed);
    if (diag->parsed()) return cmd_diagnose(x_path, b_true_path, family, q, out_dir);
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
