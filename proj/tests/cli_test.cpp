// Golden tests for the command-line tool: exit codes, output schemas and
// byte-level determinism. The binary path comes from the build system.
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kCli = SHGLM_CLI_PATH;

struct RunResult {
  int exit_code;
  std::string stderr_text;
};

RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(kCli) + " " + args + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WEXITSTATUS(status), ss.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("shglm_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(CliFit, ToyPairingRestoresLabelOrder) {
  const fs::path dir = fresh_dir("toy");
  // five records: intercept + salary against age, shuffled as in the
  // estimators unit fixture; truth mapping is [1,3,0,2,4]
  write_file(dir / "x.csv", "1,6500\n1,5000\n1,3200\n1,4300\n1,8000\n");
  write_file(dir / "y.csv", "45\n30\n50\n25\n55\n");
  const auto res = run_cli("fit --x " + (dir / "x.csv").string() + " --y " +
                               (dir / "y.csv").string() +
                               " --family gaussian --estimator two-step --out " + dir.string(),
                           dir);
  EXPECT_EQ(res.exit_code, 0) << res.stderr_text;
  EXPECT_EQ(slurp(dir / "permutation.csv"), "1\n3\n0\n2\n4\n");
  const json report = json::parse(slurp(dir / "report.json"));
  EXPECT_TRUE(report["converged"].get<bool>());
  EXPECT_EQ(report["permutation"], json::parse("[1,3,0,2,4]"));
}

TEST(CliFit, AllOnesMaskIsByteIdenticalToNoMask) {
  const fs::path dir = fresh_dir("maskid");
  write_file(dir / "x.csv", "0.1,1.0\n0.7,-0.3\n-0.4,0.6\n0.9,0.2\n-0.8,-0.5\n");
  write_file(dir / "y.csv", "1,0\n2,1\n0,3\n4,1\n1,2\n");
  write_file(dir / "mask.csv", "1,1\n1,1\n1,1\n1,1\n1,1\n");
  const std::string base = "fit --x " + (dir / "x.csv").string() + " --y " +
                           (dir / "y.csv").string() + " --family poisson --estimator ml --out ";
  const fs::path out_a = dir / "a";
  const fs::path out_b = dir / "b";
  ASSERT_EQ(run_cli(base + out_a.string(), dir).exit_code, 0);
  ASSERT_EQ(run_cli(base + out_b.string() + " --mask " + (dir / "mask.csv").string(), dir)
                .exit_code,
            0);
  EXPECT_EQ(slurp(out_a / "permutation.csv"), slurp(out_b / "permutation.csv"));
  EXPECT_EQ(slurp(out_a / "b_hat.csv"), slurp(out_b / "b_hat.csv"));
}

TEST(CliFit, NonNumericCellNamesRowAndColumn) {
  const fs::path dir = fresh_dir("badcell");
  write_file(dir / "x.csv", "1\n2\n");
  write_file(dir / "y.csv", "1\nfoo\n");
  const auto res = run_cli("fit --x " + (dir / "x.csv").string() + " --y " +
                               (dir / "y.csv").string() + " --out " + dir.string(),
                           dir);
  EXPECT_EQ(res.exit_code, 1);
  EXPECT_NE(res.stderr_text.find("row 2"), std::string::npos) << res.stderr_text;
  EXPECT_NE(res.stderr_text.find("column 1"), std::string::npos) << res.stderr_text;
}

TEST(CliFit, UnknownFamilyFails) {
  const fs::path dir = fresh_dir("badfam");
  write_file(dir / "x.csv", "1\n2\n");
  write_file(dir / "y.csv", "1\n2\n");
  const auto res = run_cli("fit --x " + (dir / "x.csv").string() + " --y " +
                               (dir / "y.csv").string() + " --family gamma --out " + dir.string(),
                           dir);
  EXPECT_EQ(res.exit_code, 1);
  EXPECT_NE(res.stderr_text.find("gamma"), std::string::npos);
}

TEST(CliFit, SeparatedLogisticExitsTwoButWritesResults) {
  const fs::path dir = fresh_dir("sep");
  std::ostringstream x, y;
  for (int i = 0; i < 12; ++i) {
    const double v = i < 6 ? -1.0 - 0.1 * i : 1.0 + 0.1 * i;
    x << v << "\n";
    y << (v > 0 ? 1 : 0) << "\n";
  }
  write_file(dir / "x.csv", x.str());
  write_file(dir / "y.csv", y.str());
  const auto res = run_cli("fit --x " + (dir / "x.csv").string() + " --y " +
                               (dir / "y.csv").string() +
                               " --family bernoulli --estimator two-step --out " + dir.string(),
                           dir);
  EXPECT_EQ(res.exit_code, 2);
  EXPECT_TRUE(fs::exists(dir / "permutation.csv"));
  EXPECT_TRUE(fs::exists(dir / "b_hat.csv"));
  EXPECT_TRUE(fs::exists(dir / "report.json"));
}

TEST(CliSimulate, DeterministicBytesAndSchema) {
  const fs::path dir = fresh_dir("sim");
  write_file(dir / "cfg.json", R"({
    "setting": "gaussian_design", "family": "gaussian",
    "n": 16, "p": 3, "h": 2, "q": 1.0,
    "estimator": "two_step", "replications": 3, "base_seed": 7,
    "sweep": {"parameter": "m", "grid": [10, 20]}
  })");
  const std::string base =
      "simulate --config " + (dir / "cfg.json").string() + " --plot --out ";
  ASSERT_EQ(run_cli(base + (dir / "a").string(), dir).exit_code, 0);
  ASSERT_EQ(run_cli(base + (dir / "b").string(), dir).exit_code, 0);
  EXPECT_EQ(slurp(dir / "a" / "curve.csv"), slurp(dir / "b" / "curve.csv"));
  EXPECT_TRUE(fs::exists(dir / "a" / "curve.svg"));

  // --seed override keeps the schema but may change the draws
  ASSERT_EQ(run_cli(base + (dir / "c").string() + " --seed 123", dir).exit_code, 0);
  std::ifstream in(dir / "c" / "curve.csv");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 3) << line;
  }
  EXPECT_EQ(rows, 2);
}

TEST(CliSimulate, UnknownConfigKeyRejected) {
  const fs::path dir = fresh_dir("simbad");
  write_file(dir / "cfg.json", R"({
    "setting": "gaussian_design", "family": "gaussian",
    "n": 16, "p": 3, "bogus_knob": 1,
    "sweep": {"parameter": "m", "grid": [10]}
  })");
  const auto res = run_cli(
      "simulate --config " + (dir / "cfg.json").string() + " --out " + dir.string(), dir);
  EXPECT_EQ(res.exit_code, 1);
  EXPECT_NE(res.stderr_text.find("bogus_knob"), std::string::npos);
}

TEST(CliSimulate, MisspecBaselinesEmitThreeCurves) {
  const fs::path dir = fresh_dir("misspec");
  write_file(dir / "cfg.json", R"({
    "setting": "gaussian_design", "family": "poisson",
    "n": 16, "p": 3, "h": 4, "q": 1.0,
    "estimator": "misspec_baselines", "replications": 2, "base_seed": 9,
    "admm": {"max_iterations": 20},
    "sweep": {"parameter": "m", "grid": [12]}
  })");
  const auto res = run_cli(
      "simulate --config " + (dir / "cfg.json").string() + " --out " + dir.string(), dir);
  EXPECT_EQ(res.exit_code, 0) << res.stderr_text;
  EXPECT_TRUE(fs::exists(dir / "curve_ml.csv"));
  EXPECT_TRUE(fs::exists(dir / "curve_linear.csv"));
  EXPECT_TRUE(fs::exists(dir / "curve_logtrans.csv"));
}

TEST(CliDiagnose, DuplicatedRowsTripTheBoundWarning) {
  const fs::path dir = fresh_dir("diag");
  write_file(dir / "x.csv", "1,0\n1,0\n0,1\n1,1\n");  // rows 0 and 1 identical
  write_file(dir / "b.csv", "0.5\n-0.2\n");
  const auto res = run_cli("diagnose --x " + (dir / "x.csv").string() + " --b " +
                               (dir / "b.csv").string() + " --family poisson --out " +
                               dir.string(),
                           dir);
  EXPECT_EQ(res.exit_code, 0);
  EXPECT_NE(res.stderr_text.find("warning"), std::string::npos);
  const json j = json::parse(slurp(dir / "diagnostics.json"));
  EXPECT_EQ(j["theorem_bound"].get<double>(), 16.0);  // n^2 with the 0/0 convention
  EXPECT_TRUE(j["bound_exceeds_0.05"].get<bool>());
  EXPECT_FALSE(j.contains("masked"));
}

TEST(CliDiagnose, MaskedBlockAppearsWithQ) {
  const fs::path dir = fresh_dir("diagq");
  write_file(dir / "x.csv", "0.9,0.1\n-0.3,0.7\n0.2,-0.8\n");
  write_file(dir / "b.csv", "0.5,1.0\n-0.2,0.3\n");
  const auto res = run_cli("diagnose --x " + (dir / "x.csv").string() + " --b " +
                               (dir / "b.csv").string() + " --family gaussian --q 0.5 --out " +
                               dir.string(),
                           dir);
  EXPECT_EQ(res.exit_code, 0);
  const json j = json::parse(slurp(dir / "diagnostics.json"));
  ASSERT_TRUE(j.contains("masked"));
  EXPECT_EQ(j["masked"]["q"].get<double>(), 0.5);
  EXPECT_GT(j["delta"]["min"].get<double>(), 0.0);
}
