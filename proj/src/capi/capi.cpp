// SPDX-License-Identifier: Apache-2.0
#include "cpsdyn.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <iterator>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cpsdyn/app.hpp"

using namespace cpsdyn;

struct cps_config {
  YAML::Node document;  // as loaded, with source marks
  std::vector<std::pair<std::string, YAML::Node>> overrides;
  RunConfig parsed;
};

struct cps_series {
  EnsembleSeries series;
};

namespace {

thread_local std::string g_last_error;

template <class F>
cps_status guard(F&& f) {
  g_last_error.clear();
  try {
    f();
    return CPS_OK;
  } catch (const ConfigError& e) {
    g_last_error = e.what();
    return CPS_ERR_CONFIG;
  } catch (const YAML::Exception& e) {
    g_last_error = e.what();
    return CPS_ERR_CONFIG;
  } catch (const DomainError& e) {
    g_last_error = e.what();
    return CPS_ERR_DOMAIN;
  } catch (const ConvergenceError& e) {
    g_last_error = e.what();
    return CPS_ERR_CONVERGENCE;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return CPS_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CPS_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return CPS_ERR_RUNTIME;
  }
}

cps_status bad_arg(const char* what) {
  g_last_error = what;
  return CPS_ERR_ARG;
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

LogSink sink(cps_log_fn log, void* user) {
  return [log, user](const std::string& line) {
    if (log != nullptr) log(line.c_str(), user);
  };
}

// Applies the overrides to a copy of the document and validates it.
// Overridden paths report the line of their enclosing section.
RunConfig reparse(const cps_config& cfg) {
  YAML::Node doc = YAML::Clone(cfg.document);
  LineMap lines = index_lines(cfg.document);
  for (const auto& [key, value] : cfg.overrides) {
    set_config_value(doc, key, value);
    for (auto it = lines.lower_bound(key); it != lines.end() && it->first.rfind(key, 0) == 0;) {
      const char next = it->first.size() > key.size() ? it->first[key.size()] : '.';
      it = (next == '.' || next == '[') ? lines.erase(it) : std::next(it);
    }
  }
  return parse_config(doc, &lines);
}

YAML::Node parse_value(const char* text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(std::string("override value '") + text + "': " + e.msg);
  }
}

cps_status make_config(YAML::Node node, size_t n_overrides, const char* const* keys,
                       const char* const* values, cps_config** out) {
  if (out == nullptr) return bad_arg("null output pointer");
  *out = nullptr;
  if (n_overrides > 0 && (keys == nullptr || values == nullptr)) return bad_arg("null override arrays");
  return guard([&] {
    auto cfg = std::make_unique<cps_config>();
    cfg->document = node;
    for (size_t i = 0; i < n_overrides; ++i) {
      if (keys[i] == nullptr || values[i] == nullptr) throw ConfigError("null override entry");
      cfg->overrides.emplace_back(keys[i], parse_value(values[i]));
    }
    cfg->parsed = reparse(*cfg);
    *out = cfg.release();
  });
}

YAML::Node load_yaml_file(const char* path) {
  try {
    return YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw std::filesystem::filesystem_error("cannot read config file", std::filesystem::path(path),
                                            std::make_error_code(std::errc::no_such_file_or_directory));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line + 1);
  }
}

}  // namespace

extern "C" {

const char* cps_last_error(void) { return g_last_error.c_str(); }

const char* cps_version(void) {
  static const std::string v = version_string();
  return v.c_str();
}

char* cps_version_report(void) { return dup(version_report()); }

void cps_string_free(char* s) { std::free(s); }

cps_status cps_config_load_file(const char* path, cps_config** out) {
  return cps_config_load_file_overrides(path, 0, nullptr, nullptr, out);
}

cps_status cps_config_load_file_overrides(const char* path, size_t n, const char* const* keys,
                                          const char* const* values, cps_config** out) {
  if (path == nullptr) return bad_arg("null path");
  YAML::Node node;
  const cps_status st = guard([&] { node = load_yaml_file(path); });
  if (st != CPS_OK) return st;
  return make_config(node, n, keys, values, out);
}

cps_status cps_config_load_string(const char* yaml, cps_config** out) {
  if (yaml == nullptr) return bad_arg("null text");
  YAML::Node node;
  const cps_status st = guard([&] {
    try {
      node = YAML::Load(yaml);
    } catch (const YAML::ParserException& e) {
      throw ConfigError(e.msg, e.mark.line + 1);
    }
  });
  if (st != CPS_OK) return st;
  return make_config(node, 0, nullptr, nullptr, out);
}

cps_status cps_config_set(cps_config* cfg, const char* dotted_key, const char* yaml_value) {
  if (cfg == nullptr || dotted_key == nullptr || yaml_value == nullptr) return bad_arg("null argument");
  return guard([&] {
    cps_config next = *cfg;
    next.overrides.emplace_back(dotted_key, parse_value(yaml_value));
    cfg->parsed = reparse(next);
    cfg->overrides = std::move(next.overrides);
  });
}

cps_status cps_config_resolved(const cps_config* cfg, char** yaml_out) {
  if (cfg == nullptr || yaml_out == nullptr) return bad_arg("null argument");
  return guard([&] { *yaml_out = dup(emit_yaml(cfg->parsed.resolved)); });
}

void cps_config_free(cps_config* cfg) { delete cfg; }

cps_status cps_run(const cps_config* cfg, cps_log_fn log, void* user) {
  if (cfg == nullptr) return bad_arg("null config");
  return guard([&] { cmd_run(cfg->parsed, sink(log, user)); });
}

cps_status cps_sweep(const cps_config* cfg, cps_log_fn log, void* user) {
  if (cfg == nullptr) return bad_arg("null config");
  return guard([&] { cmd_sweep(cfg->parsed, sink(log, user)); });
}

cps_status cps_oracle(const cps_config* cfg, cps_log_fn log, void* user) {
  if (cfg == nullptr) return bad_arg("null config");
  return guard([&] { cmd_oracle(cfg->parsed, sink(log, user)); });
}

cps_status cps_marginals(const cps_config* cfg, cps_log_fn log, void* user) {
  if (cfg == nullptr) return bad_arg("null config");
  return guard([&] { cmd_marginals(cfg->parsed, sink(log, user)); });
}

cps_status cps_selftest(double gamma_override, uint64_t seed, char** report, int* n_failed) {
  return guard([&] {
    SelftestOptions o;
    if (std::isfinite(gamma_override)) o.gamma_override = gamma_override;
    o.seed = seed;
    const auto checks = run_selftest(o);
    int failed = 0;
    for (const auto& c : checks) failed += c.passed ? 0 : 1;
    if (n_failed != nullptr) *n_failed = failed;
    if (report != nullptr) *report = dup(format_selftest(checks));
  });
}

cps_status cps_run_series(const cps_config* cfg, cps_series** out) {
  if (cfg == nullptr || out == nullptr) return bad_arg("null argument");
  *out = nullptr;
  return guard([&] { *out = new cps_series{run_series(cfg->parsed)}; });
}

cps_status cps_oracle_series(const cps_config* cfg, cps_series** out) {
  if (cfg == nullptr || out == nullptr) return bad_arg("null argument");
  *out = nullptr;
  return guard([&] { *out = new cps_series{oracle_series(cfg->parsed)}; });
}

cps_status cps_series_load(const char* csv_path, cps_series** out) {
  if (csv_path == nullptr || out == nullptr) return bad_arg("null argument");
  *out = nullptr;
  return guard([&] {
    if (!std::filesystem::exists(csv_path)) {
      throw std::filesystem::filesystem_error("no such file", std::filesystem::path(csv_path),
                                              std::make_error_code(std::errc::no_such_file_or_directory));
    }
    *out = new cps_series{EnsembleSeries::read_csv(csv_path)};
  });
}

cps_status cps_series_save(const cps_series* s, const char* csv_path) {
  if (s == nullptr || csv_path == nullptr) return bad_arg("null argument");
  return guard([&] { s->series.write_csv(std::string(csv_path)); });
}

size_t cps_series_n_times(const cps_series* s) { return s ? static_cast<size_t>(s->series.times.size()) : 0; }

size_t cps_series_n_columns(const cps_series* s) { return s ? s->series.names.size() : 0; }

const char* cps_series_column_name(const cps_series* s, size_t column) {
  if (s == nullptr || column >= s->series.names.size()) return nullptr;
  return s->series.names[column].c_str();
}

int cps_series_find(const cps_series* s, const char* name) {
  if (s == nullptr || name == nullptr) return -1;
  for (size_t i = 0; i < s->series.names.size(); ++i) {
    if (s->series.names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

double cps_series_time(const cps_series* s, size_t t) {
  if (s == nullptr || t >= cps_series_n_times(s)) return NAN;
  return s->series.times(static_cast<Eigen::Index>(t));
}

double cps_series_value(const cps_series* s, size_t column, size_t t) {
  if (s == nullptr || column >= cps_series_n_columns(s) || t >= cps_series_n_times(s)) return NAN;
  return s->series.values(static_cast<Eigen::Index>(column), static_cast<Eigen::Index>(t));
}

double cps_series_error(const cps_series* s, size_t column, size_t t) {
  if (s == nullptr || column >= cps_series_n_columns(s) || t >= cps_series_n_times(s)) return NAN;
  return s->series.errors(static_cast<Eigen::Index>(column), static_cast<Eigen::Index>(t));
}

long cps_series_n_trajectories(const cps_series* s) { return s ? s->series.n_trajectories : 0; }

long cps_series_n_failed(const cps_series* s) { return s ? s->series.n_failed : 0; }

void cps_series_free(cps_series* s) { delete s; }

}  // extern "C"
