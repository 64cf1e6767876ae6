// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Core>
#include <fftw3.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cpsdyn/app.hpp"

#ifndef CPSDYN_VERSION
#define CPSDYN_VERSION "0.0.0"
#endif
#ifndef CPSDYN_YAML_CPP_VERSION
#define CPSDYN_YAML_CPP_VERSION "unknown"
#endif

namespace fs = std::filesystem;

namespace cpsdyn {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void convert_times(EnsembleSeries& s, const std::string& unit) {
  if (unit == "fs") s.times *= kAuTimeToFs;
  s.metadata.emplace_back("time_unit", unit);
}

fs::path output_dir(const RunConfig& cfg) {
  fs::path dir(cfg.output_directory);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

void write_meta(const fs::path& path, const std::string& command, const RunConfig& cfg,
                const ParameterDump& extra) {
  std::ofstream f = open_out(path);
  f << "command: " << command << "\n" << version_report();
  for (const auto& kv : extra) f << kv.first << ": " << kv.second << "\n";
  f << "---\n" << emit_yaml(cfg.resolved);
}

std::shared_ptr<const LinearHarmonicModel> harmonic_model(const ModelConfig& m) {
  ModelConfig plain = m;
  plain.frozen = false;
  auto model = std::dynamic_pointer_cast<const LinearHarmonicModel>(build_model(plain));
  if (!model) throw DomainError("the fock oracle needs a linear-harmonic model");
  return model;
}

EnsembleSeries frozen_oracle(const ModelConfig& mc, const OracleConfig& oc) {
  ModelConfig frozen = mc;
  frozen.frozen = true;
  const ModelPtr model = build_model(frozen);
  const int F = model->n_states();
  Mat V;
  model->potential(Vec::Zero(model->n_dof()), V);
  CVec psi0 = CVec::Zero(F);
  psi0(model->initial_state()) = 1.0;

  EnsembleSeries s;
  const int n = static_cast<int>(std::floor(oc.t_final / oc.record_dt + 1e-9)) + 1;
  s.times.resize(n);
  for (int k = 0; k < F; ++k) s.names.push_back("P" + std::to_string(k + 1));
  if (F == 2) s.names.push_back("D12");
  s.names.push_back("total");
  s.values = Mat::Zero(static_cast<Eigen::Index>(s.names.size()), n);
  s.errors = Mat::Zero(s.values.rows(), n);
  for (int j = 0; j < n; ++j) {
    const double t = j * oc.record_dt;
    s.times(j) = t;
    const Vec p = frozen_nuclei_exact(V, psi0, t);
    for (int k = 0; k < F; ++k) s.values(k, j) = p(k);
    if (F == 2) s.values(F, j) = p(0) - p(1);
    s.values(s.values.rows() - 1, j) = p.sum();
  }
  for (const auto& kv : model->parameters()) s.metadata.emplace_back("model." + kv.first, kv.second);
  s.metadata.emplace_back("method", "oracle:frozen");
  s.metadata.emplace_back("initial_state", std::to_string(model->initial_state() + 1));
  return s;
}

void check_failures(const EnsembleSeries& s, const LogSink& log) {
  if (s.n_failed == 0) return;
  const double frac = static_cast<double>(s.n_failed) / static_cast<double>(s.n_trajectories);
  const std::string msg = std::to_string(s.n_failed) + " of " + std::to_string(s.n_trajectories) +
                          " trajectories failed (" + num(100.0 * frac) + "%)";
  if (frac > 0.10) throw std::runtime_error(msg);
  if (frac > 0.01) log("warning: " + msg);
}

ParameterDump run_summary(const EnsembleSeries& s, const EnsembleDiagnostics& d) {
  ParameterDump out{{"n_trajectories", std::to_string(s.n_trajectories)},
                    {"n_failed", std::to_string(s.n_failed)},
                    {"max_energy_drift", num(d.max_energy_drift)},
                    {"mean_energy_drift", num(d.mean_energy_drift)}};
  if (!d.first_failure.empty()) out.emplace_back("first_failure", d.first_failure);
  return out;
}

bool has_path(const YAML::Node& root, const std::string& dotted) {
  YAML::Node cur = YAML::Clone(root);
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!cur.IsMap()) return false;
    const YAML::Node& c = cur;
    const YAML::Node next = c[part];
    if (!next) return false;
    if (dot == std::string::npos) return true;
    cur.reset(next);
    start = dot + 1;
  }
}

std::string value_label(const YAML::Node& v) {
  std::string text = v.IsScalar() ? v.Scalar() : emit_yaml(v);
  std::string out;
  for (char ch : text) {
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' || ch == '+') {
      out.push_back(ch);
    } else if (!out.empty() && out.back() != '_') {
      out.push_back('_');
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "value" : out;
}

}  // namespace

std::string version_string() { return CPSDYN_VERSION; }

std::string version_report() {
  std::ostringstream os;
  os << "cpsdyn: " << CPSDYN_VERSION << "\n"
     << "eigen: " << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "." << EIGEN_MINOR_VERSION << "\n"
     << "yaml-cpp: " << CPSDYN_YAML_CPP_VERSION << "\n"
     << "fftw: " << fftw_version << "\n"
     << "compiler: " << __VERSION__ << "\n";
  return os.str();
}

EnsembleSeries run_series(const RunConfig& cfg, EnsembleDiagnostics* diagnostics) {
  if (!cfg.model || !cfg.ensemble) throw ConfigError("run needs model and method sections");
  EnsembleSeries s = run_ensemble(build_model(*cfg.model), *cfg.ensemble, diagnostics);
  convert_times(s, cfg.time_unit);
  return s;
}

EnsembleSeries oracle_series(const RunConfig& cfg) {
  if (!cfg.model || !cfg.oracle) throw ConfigError("oracle needs model and oracle sections");
  const ModelConfig& mc = *cfg.model;
  const OracleConfig& oc = *cfg.oracle;
  EnsembleSeries s;
  switch (oc.kind) {
    case OracleConfig::Kind::Dvr: {
      const TullyParams& p = mc.tully;
      const ModelPtr model = build_model(mc);
      const Wavepacket packet{p.alpha, p.R0, p.P0, model->initial_state()};
      s = split_operator_dvr_converged(*model, packet, oc.grid, oc.dvr, oc.dt_gate_tolerance).series;
      break;
    }
    case OracleConfig::Kind::Fock: {
      const auto model = harmonic_model(mc);
      s = fock_propagate(*model, oc.fock, oc.fock_initial, oc.fock_options).series;
      break;
    }
    case OracleConfig::Kind::Frozen:
      s = frozen_oracle(mc, oc);
      break;
  }
  convert_times(s, cfg.time_unit);
  return s;
}

void cmd_run(const RunConfig& cfg, const LogSink& log) {
  EnsembleDiagnostics diag;
  const EnsembleSeries s = run_series(cfg, &diag);
  const fs::path dir = output_dir(cfg);
  s.write_csv((dir / "series.csv").string());
  write_meta(dir / "meta.txt", "run", cfg, run_summary(s, diag));
  log("wrote " + (dir / "series.csv").string());
  check_failures(s, log);
}

void cmd_oracle(const RunConfig& cfg, const LogSink& log) {
  const EnsembleSeries s = oracle_series(cfg);
  const fs::path dir = output_dir(cfg);
  s.write_csv((dir / "oracle.csv").string());
  write_meta(dir / "meta.txt", "oracle", cfg, {});
  log("wrote " + (dir / "oracle.csv").string());
}

void cmd_sweep(const RunConfig& cfg, const LogSink& log) {
  if (!cfg.sweep) throw ConfigError("sweep needs a sweep section");
  const SweepConfig& sw = *cfg.sweep;
  if (sw.values.empty()) throw ConfigError("sweep: empty value list");
  if (!has_path(cfg.resolved, sw.parameter)) {
    throw ConfigError("sweep.parameter: '" + sw.parameter + "' is not a configuration key");
  }
  const fs::path dir = output_dir(cfg);
  const std::string leaf = sw.parameter.substr(sw.parameter.rfind('.') + 1);

  std::vector<EnsembleSeries> results;
  std::vector<std::string> labels;
  for (const YAML::Node& value : sw.values) {
    YAML::Node doc = YAML::Clone(cfg.source);
    doc.remove("sweep");
    set_config_value(doc, sw.parameter, value);
    const std::string label = value_label(value);
    set_config_value(doc, "output.directory", YAML::Node((dir / (leaf + "_" + label)).string()));
    const RunConfig one = parse_config(doc);
    log(sw.parameter + " = " + label);
    if (sw.oracle) {
      cmd_oracle(one, log);
      results.push_back(EnsembleSeries::read_csv((fs::path(one.output_directory) / "oracle.csv").string()));
    } else {
      cmd_run(one, log);
      results.push_back(EnsembleSeries::read_csv((fs::path(one.output_directory) / "series.csv").string()));
    }
    labels.push_back(value.IsScalar() ? value.Scalar() : label);
  }

  std::ofstream f = open_out(dir / "summary.csv");
  f << "# parameter: " << sw.parameter << "\n# target: " << (sw.oracle ? "oracle" : "ensemble") << "\n";
  f << sw.parameter;
  for (const auto& name : results.front().names) f << "," << name << "," << name << "_err";
  f << "\n";
  char buf[64];
  for (std::size_t i = 0; i < results.size(); ++i) {
    const EnsembleSeries& s = results[i];
    f << labels[i];
    const Eigen::Index last = s.times.size() - 1;
    for (Eigen::Index c = 0; c < s.values.rows(); ++c) {
      std::snprintf(buf, sizeof buf, ",%.12e,%.6e", s.values(c, last), s.errors(c, last));
      f << buf;
    }
    f << "\n";
  }
  write_meta(dir / "meta.txt", "sweep", cfg, {});
  log("wrote " + (dir / "summary.csv").string());
}

void cmd_marginals(const RunConfig& cfg, const LogSink& log) {
  if (!cfg.marginals) throw ConfigError("marginals needs a marginals section");
  const MarginalsConfig& mc = *cfg.marginals;
  const fs::path dir = output_dir(cfg);
  std::vector<std::pair<std::string, Grid2D>> grids;
  double scale = 1.0;

  if (mc.kind == MarginalsConfig::Kind::Hybrid) {
    std::vector<Grid2D> blocks = hybrid_block_grids(mc.state, mc.R_axis, mc.P_axis);
    for (int n = 0; n < 2; ++n) {
      for (int m = 0; m < 2; ++m) {
        grids.emplace_back("hybrid_B" + std::to_string(n + 1) + std::to_string(m + 1) + ".csv",
                           std::move(blocks[static_cast<std::size_t>(2 * n + m)]));
      }
    }
    Grid2D joint = grids.front().second;
    joint.values = CMat::Zero(mc.R_axis.points, mc.P_axis.points);
    for (int i = 0; i < mc.R_axis.points; ++i) {
      for (int j = 0; j < mc.P_axis.points; ++j) {
        joint.values(i, j) =
            hybrid_joint(mc.state, mc.scheme, mc.R_axis.at(i), mc.P_axis.at(j), mc.point_x1, mc.point_x2);
      }
    }
    joint.metadata = {{"axes", "R,P"},
                      {"state", to_string(mc.state)},
                      {"gamma_scheme", describe(mc.scheme)},
                      {"nm_pair", "contracted"},
                      {"point", num(mc.point_x1) + "," + num(mc.point_x2)}};
    grids.emplace_back("hybrid_joint.csv", std::move(joint));
  } else {
    if (mc.scaled) scale = support_radius(mc.scheme);
    for (const auto& [n, m] : mc.entries) {
      const std::string name = "marginal_" + std::to_string(n + 1) + std::to_string(m + 1) + ".csv";
      if (mc.kind == MarginalsConfig::Kind::ClosedForm) {
        grids.emplace_back(name, marginal_f2_grid(mc.scheme, n, m, mc.second.momentum, mc.axis1, mc.axis2));
      } else {
        MarginalMcOptions o;
        o.n = n;
        o.m = m;
        o.first = mc.first;
        o.second = mc.second;
        o.axis1 = mc.axis1;
        o.axis2 = mc.axis2;
        o.n_samples = mc.n_samples;
        o.seed = mc.seed;
        o.workers = mc.workers;
        MarginalMcResult r = marginal_mc(mc.scheme, o);
        if (!r.warning.empty()) log("warning: " + r.warning);
        grids.emplace_back(name, std::move(r.grid));
      }
    }
  }
  for (auto& [name, g] : grids) {
    if (scale != 1.0) g.metadata.emplace_back("coordinate_scale", num(scale));
    g.write_csv((dir / name).string(), scale);
    log("wrote " + (dir / name).string());
  }
  write_meta(dir / "meta.txt", "marginals", cfg, {});
}

}  // namespace cpsdyn
