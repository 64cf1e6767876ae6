// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cpsdyn/app.hpp"

using namespace cpsdyn;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cpsdyn_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string error_of(const std::string& text) {
  try {
    load_config_string(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const LogSink quiet = [](const std::string&) {};

const char* kSmallSac = R"(model:
  kind: tully
  variant: SAC
  P0: 20
method:
  name: cmm
integrator:
  dt: 2.0
  max_time: 600
  record_stride: 50
ensemble:
  n_trajectories: 300
  seed: 5
)";

}  // namespace

TEST_CASE("shipped configs validate") {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(CPSDYN_CONFIG_DIR)) {
    if (entry.path().extension() != ".yaml") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_config_file(entry.path().string()));
    ++count;
  }
  CHECK(count >= 10);
}

TEST_CASE("validation errors carry the source line") {
  const std::string base = "model:\n  kind: tully\n  variant: SAC\nmethod:\n  name: cmm\nensemble:\n";
  const std::string zero = error_of(base + "  n_trajectories: 0\n");
  CHECK(zero.find("line 7") != std::string::npos);
  CHECK(zero.find("n_trajectories") != std::string::npos);

  const std::string unknown = error_of("model:\n  kind: tully\n  bogus: 1\n");
  CHECK(unknown.find("line 3") != std::string::npos);
  CHECK(unknown.find("bogus") != std::string::npos);

  CHECK(error_of("model:\n  kind: tully\nwhat: 1\n").find("what") != std::string::npos);
  CHECK(error_of("model:\n  kind: nope\n").find("kind") != std::string::npos);
  CHECK(!error_of(base + "  n_trajectories: 10\nsweep:\n  parameter: model.P0\n  values: []\n").empty());
  CHECK(!error_of("model:\n  kind: tully\nmethod:\n  name: wmm\n  delta: 0.7\n").empty());
  CHECK(!error_of("model:\n  kind: tully\nmethod:\n  name: cmm\n  gamma: -0.6\n").empty());
  CHECK(!error_of("model:\n  kind: tully\nmethod:\n  name: cmm\nintegrator:\n  dt: -1\n").empty());
  CHECK(!error_of("model:\n  kind: tully\nobservables:\n  - population: 3\nmethod:\n  name: cmm\n").empty());
  CHECK(error_of(kSmallSac).empty());
}

TEST_CASE("defaults are resolved and echoed") {
  const RunConfig c = load_config_string("model:\n  kind: tully\n  variant: ECR\nmethod:\n  name: fssh\n");
  REQUIRE(c.ensemble.has_value());
  CHECK(c.ensemble->integrator.dt == 0.5);
  CHECK(c.ensemble->integrator.representation == Representation::Adiabatic);
  CHECK(c.resolved["integrator"]["dt"].as<double>() == 0.5);
  CHECK(c.resolved["model"]["mass"].as<double>() == 2000.0);
  CHECK(c.resolved["ensemble"]["seed"].IsDefined());

  const RunConfig l = load_config_string("model:\n  kind: lvcm\nmethod:\n  name: cmm\n");
  CHECK(l.time_unit == "fs");
  CHECK(l.ensemble->integrator.dt == doctest::Approx(0.1 / kAuTimeToFs));
}

TEST_CASE("set_config_value") {
  YAML::Node n = YAML::Load(kSmallSac);
  set_config_value(n, "ensemble.seed", "11");
  set_config_value(n, "output.directory", "somewhere");
  CHECK(n["ensemble"]["seed"].as<int>() == 11);
  CHECK(n["output"]["directory"].as<std::string>() == "somewhere");
  CHECK(parse_config(n).ensemble->seed == 11);
}

TEST_CASE("run output is byte-identical across reruns and worker counts") {
  const fs::path dir = scratch("determinism");
  std::string first;
  for (int workers : {1, 1, 4}) {
    YAML::Node n = YAML::Load(kSmallSac);
    set_config_value(n, "ensemble.workers", std::to_string(workers));
    set_config_value(n, "output.directory", (dir / ("w" + std::to_string(workers))).string());
    const RunConfig c = parse_config(n);
    cmd_run(c, quiet);
    const std::string csv = slurp(fs::path(c.output_directory) / "series.csv");
    CHECK(!csv.empty());
    if (first.empty()) first = csv;
    CHECK(csv == first);
    const std::string meta = slurp(fs::path(c.output_directory) / "meta.txt");
    CHECK(meta.find("n_failed") != std::string::npos);
    CHECK(meta.find("yaml-cpp") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("sweep writes one run per value and a summary") {
  const fs::path dir = scratch("sweep");
  YAML::Node n = YAML::Load(kSmallSac);
  set_config_value(n, "ensemble.n_trajectories", "64");
  set_config_value(n, "sweep.parameter", "model.P0");
  set_config_value(n, "sweep.values", "[10, 15, 20, 25, 30]");
  set_config_value(n, "output.directory", dir.string());
  cmd_sweep(parse_config(n), quiet);
  int runs = 0;
  for (const auto& e : fs::directory_iterator(dir)) runs += e.is_directory() ? 1 : 0;
  CHECK(runs == 5);
  const std::string summary = slurp(dir / "summary.csv");
  CHECK(summary.find("T1,T1_err,T2,T2_err,R1,R1_err,R2,R2_err") != std::string::npos);
  std::istringstream lines(summary);
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) rows += (!line.empty() && std::isdigit(static_cast<unsigned char>(line[0]))) ? 1 : 0;
  CHECK(rows == 5);

  set_config_value(n, "sweep.parameter", "model.nonexistent");
  CHECK_THROWS(cmd_sweep(parse_config(n), quiet));
  fs::remove_all(dir);
}

TEST_CASE("oracle command on the frozen two-level model") {
  const fs::path dir = scratch("oracle");
  YAML::Node n = YAML::LoadFile(std::string(CPSDYN_CONFIG_DIR) + "/two_level_frozen.yaml");
  set_config_value(n, "output.directory", dir.string());
  const RunConfig c = parse_config(n);
  cmd_oracle(c, quiet);
  const EnsembleSeries s = EnsembleSeries::read_csv((dir / "oracle.csv").string());
  const int P1 = s.column("P1");
  for (Eigen::Index j = 0; j < s.times.size(); ++j) {
    CHECK(s.values(P1, j) == doctest::Approx(std::pow(std::cos(0.1 * s.times(j)), 2)).epsilon(1e-10));
  }
  fs::remove_all(dir);
}

TEST_CASE("marginals command writes grids") {
  const fs::path dir = scratch("marginals");
  YAML::Node n = YAML::LoadFile(std::string(CPSDYN_CONFIG_DIR) + "/marginals_f2.yaml");
  set_config_value(n, "output.directory", dir.string());
  cmd_marginals(parse_config(n), quiet);
  int grids = 0;
  for (const auto& e : fs::directory_iterator(dir)) grids += e.path().extension() == ".csv" ? 1 : 0;
  CHECK(grids >= 1);
  fs::remove_all(dir);
}

TEST_CASE("self-test passes and the negative control fails") {
  const auto ok = run_selftest({});
  for (const auto& c : ok) CHECK_MESSAGE(c.passed, c.name);
  CHECK(format_selftest(ok).find("checks passed") != std::string::npos);
  SelftestOptions bad;
  bad.gamma_override = 0.3;
  int failed = 0;
  for (const auto& c : run_selftest(bad)) failed += c.passed ? 0 : 1;
  CHECK(failed >= 2);
}
