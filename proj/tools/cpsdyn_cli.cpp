// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Talks to the engine only through the C API.
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cpsdyn.h"

namespace {

int exit_code(cps_status st) {
  switch (st) {
    case CPS_OK:
      return 0;
    case CPS_ERR_CONFIG:
    case CPS_ERR_ARG:
      return 2;
    default:
      return 1;
  }
}

int report(cps_status st) {
  if (st != CPS_OK) std::fprintf(stderr, "error: %s\n", cps_last_error());
  return exit_code(st);
}

void print_line(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

struct CommonFlags {
  std::string config;
  std::string out;
  std::string seed;
  std::string workers;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_seed) {
  cmd->add_option("--config", f.config, "YAML configuration file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "Output directory (overrides output.directory)");
  if (with_seed) {
    cmd->add_option("--seed", f.seed, "Master seed (overrides ensemble.seed)");
    cmd->add_option("--workers", f.workers, "Worker threads (overrides ensemble.workers)");
  }
  cmd->add_option("--set", f.sets, "Override a key, e.g. --set model.P0=20")->take_all();
}

// Overrides are applied before validation so they can repair a file value.
cps_status load(const CommonFlags& f, cps_config** cfg) {
  std::vector<std::string> keys, values;
  for (const std::string& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      return CPS_ERR_ARG;
    }
    keys.push_back(kv.substr(0, eq));
    values.push_back(kv.substr(eq + 1));
  }
  auto add = [&](const char* key, const std::string& value) {
    if (value.empty()) return;
    keys.emplace_back(key);
    values.push_back(value);
  };
  add("ensemble.seed", f.seed);
  add("ensemble.workers", f.workers);
  add("output.directory", f.out);
  std::vector<const char*> k, v;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    k.push_back(keys[i].c_str());
    v.push_back(values[i].c_str());
  }
  return cps_config_load_file_overrides(f.config.c_str(), k.size(), k.data(), v.data(), cfg);
}

using Command = cps_status (*)(const cps_config*, cps_log_fn, void*);

int run_command(const CommonFlags& f, Command cmd) {
  cps_config* cfg = nullptr;
  cps_status st = load(f, &cfg);
  if (st == CPS_OK) st = cmd(cfg, print_line, nullptr);
  const int code = report(st);
  cps_config_free(cfg);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory ensembles for nonadiabatic dynamics on constraint phase space"};
  app.set_version_flag("--version", std::string(cps_version()));
  app.require_subcommand(1);

  CommonFlags run_f, sweep_f, oracle_f, marg_f;
  CLI::App* run = app.add_subcommand("run", "Run a trajectory ensemble; writes series.csv and meta.txt");
  add_common(run, run_f, true);
  CLI::App* sweep = app.add_subcommand("sweep", "Run once per value of sweep.parameter; writes summary.csv");
  add_common(sweep, sweep_f, true);
  CLI::App* oracle = app.add_subcommand("oracle", "Run the exact reference; writes oracle.csv");
  add_common(oracle, oracle_f, false);
  CLI::App* marg = app.add_subcommand("marginals", "Write marginal or hybrid distribution grids");
  add_common(marg, marg_f, true);

  CLI::App* self = app.add_subcommand("selftest", "Run the fast invariant suite");
  std::uint64_t self_seed = 1;
  double gamma_override = NAN;
  self->add_option("--seed", self_seed, "Seed of the Monte Carlo checks");
  self->add_option("--gamma-override", gamma_override, "Replace the self-inverse gamma (negative control)");

  CLI11_PARSE(app, argc, argv);

  if (*run) return run_command(run_f, cps_run);
  if (*sweep) return run_command(sweep_f, cps_sweep);
  if (*oracle) return run_command(oracle_f, cps_oracle);
  if (*marg) return run_command(marg_f, cps_marginals);
  if (*self) {
    char* text = nullptr;
    int failed = 0;
    const cps_status st = cps_selftest(gamma_override, self_seed, &text, &failed);
    if (st != CPS_OK) return report(st);
    std::fputs(text, stdout);
    cps_string_free(text);
    return failed == 0 ? 0 : 1;
  }
  return 2;
}
