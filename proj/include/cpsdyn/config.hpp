// SPDX-License-Identifier: Apache-2.0
//
// Structured run configuration. A YAML document is validated against a fixed
// schema (unknown keys are rejected with their source line), defaults are
// filled in, and the resolved tree is kept for provenance.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "cpsdyn/ensemble.hpp"
#include "cpsdyn/marginals.hpp"
#include "cpsdyn/models.hpp"
#include "cpsdyn/oracles.hpp"

namespace cpsdyn {

enum class ModelKind { Tully, SpinBoson, Cavity, Lvcm, TwoLevel };

struct ModelConfig {
  ModelKind kind = ModelKind::Tully;
  TullyParams tully;
  SpinBosonParams spin_boson;
  CavityParams cavity;
  LvcmParams lvcm;
  double two_level_epsilon = 0.0;
  double two_level_delta = 0.1;
  std::optional<int> initial_state;  // 0-based
  /// Freeze nuclei at the mean of the initial Wigner distribution.
  bool frozen = false;
};

struct OracleConfig {
  enum class Kind { Dvr, Fock, Frozen };
  Kind kind = Kind::Dvr;
  GridSpec grid;
  DvrOptions dvr;
  double dt_gate_tolerance = 1e-4;
  FockSpec fock;
  FockInitial fock_initial;
  FockOptions fock_options;
  double t_final = 10.0;  // frozen
  double record_dt = 0.1;
};

struct MarginalsConfig {
  enum class Kind { ClosedForm, MonteCarlo, Hybrid };
  Kind kind = Kind::ClosedForm;
  int F = 2;
  GammaScheme scheme = GammaScheme::single(gamma_star(2), 2);
  std::vector<std::pair<int, int>> entries;  // 0-based (n, m)
  PhaseAxis first{false, 0};
  PhaseAxis second{false, 1};
  UniformAxis axis1;
  UniformAxis axis2;
  bool scaled = true;
  long n_samples = 1000000;
  HybridState state = HybridState::Bell;
  UniformAxis R_axis{-3.0, 3.0, 25};
  UniformAxis P_axis{-3.0, 3.0, 25};
  /// Discrete point (x1, x2) at which hybrid grids contract the kernel.
  double point_x1 = 0.5;
  double point_x2 = 0.5;
  std::uint64_t seed = 1;  // from ensemble.seed
  int workers = 1;         // from ensemble.workers
};

struct SweepConfig {
  std::string parameter;  // dotted path, e.g. model.P0
  std::vector<YAML::Node> values;
  bool oracle = false;  // sweep the oracle instead of the ensemble
};

struct RunConfig {
  std::optional<ModelConfig> model;
  std::optional<EnsembleConfig> ensemble;  // method, scheme, integrator, observables
  std::optional<OracleConfig> oracle;
  std::optional<MarginalsConfig> marginals;
  std::optional<SweepConfig> sweep;
  std::string output_directory = "out";
  /// Time unit of every time-like input and of the output t column.
  std::string time_unit = "au";
  /// Document as given, and with defaults filled in.
  YAML::Node source;
  YAML::Node resolved;
};

/// Dotted path ("ensemble.seed", "observables[0].population") to 1-based
/// source line.
using LineMap = std::map<std::string, int>;

/// Line index of a freshly loaded document (clones lose source marks).
LineMap index_lines(const YAML::Node& root);

/// Parses and validates a document. Throws ConfigError with a line number
/// taken from `lines`, or from the document's own marks when null.
RunConfig parse_config(const YAML::Node& root, const LineMap* lines = nullptr);
RunConfig load_config_file(const std::string& path);
RunConfig load_config_string(const std::string& text);

/// Sets a dotted key (e.g. "ensemble.seed") to a YAML scalar or flow value,
/// creating intermediate maps.
void set_config_value(YAML::Node& root, const std::string& dotted_key, const YAML::Node& value);
void set_config_value(YAML::Node& root, const std::string& dotted_key, const std::string& text);

/// Model described by the configuration (frozen wrapper applied).
ModelPtr build_model(const ModelConfig& cfg);

std::string emit_yaml(const YAML::Node& node);

}  // namespace cpsdyn
