// SPDX-License-Identifier: Apache-2.0
#include "cpsdyn/config.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

namespace cpsdyn {

namespace {

thread_local const LineMap* g_lines = nullptr;

// Source line of a dotted path, falling back to the nearest enclosing key.
int line_at(std::string path) {
  if (g_lines == nullptr) return 0;
  while (!path.empty()) {
    const auto it = g_lines->find(path);
    if (it != g_lines->end()) return it->second;
    const std::size_t cut = path.find_last_of(".[");
    if (cut == std::string::npos) break;
    path.resize(cut);
  }
  return 0;
}

template <class T>
const char* type_name() {
  if constexpr (std::is_same_v<T, bool>) return "a boolean";
  if constexpr (std::is_integral_v<T>) return "an integer";
  if constexpr (std::is_floating_point_v<T>) return "a number";
  if constexpr (std::is_same_v<T, std::string>) return "a string";
  return "a list";
}

template <class T>
T convert(const YAML::Node& v, const std::string& path) {
  try {
    return v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path + ": expected " + type_name<T>(), line_at(path));
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

// Defaults written back into the tree; doubles at 15 significant digits.
template <class T>
YAML::Node to_node(const T& v) {
  if constexpr (std::is_same_v<T, double>) {
    return YAML::Node(format_double(v));
  } else if constexpr (std::is_same_v<T, std::string> || std::is_arithmetic_v<T>) {
    return YAML::Node(v);
  } else {
    YAML::Node seq(YAML::NodeType::Sequence);
    for (const auto& x : v) seq.push_back(to_node(x));
    seq.SetStyle(YAML::EmitterStyle::Flow);
    return seq;
  }
}

/// One mapping in the document. Every key read through `get` is recorded;
/// `finish` rejects the rest. Missing keys get their defaults written back so
/// the tree doubles as the resolved configuration.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (!node_.IsDefined() || node_.IsNull()) node_ = YAML::Node(YAML::NodeType::Map);
    if (!node_.IsMap()) throw ConfigError(path_ + ": expected a mapping", line_at(path_));
  }

  bool has(const std::string& key) const {
    const YAML::Node c = node_;
    return static_cast<bool>(c[key]);
  }

  YAML::Node raw(const std::string& key) {
    known_.insert(key);
    const YAML::Node c = node_;
    return c[key];
  }

  template <class T>
  T get(const std::string& key, const T& def) {
    YAML::Node v = raw(key);
    if (!v) {
      node_[key] = to_node(def);
      return def;
    }
    return convert<T>(v, where(key));
  }

  template <class T>
  T require(const std::string& key) {
    YAML::Node v = raw(key);
    if (!v) throw ConfigError(where(key) + ": required key missing", line_at(path_));
    return convert<T>(v, where(key));
  }

  Section sub(const std::string& key) {
    known_.insert(key);
    if (!has(key)) node_[key] = YAML::Node(YAML::NodeType::Map);
    return Section(node_[key], where(key));
  }

  void set(const std::string& key, const YAML::Node& value) { node_[key] = value; }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      const std::string k = it->first.as<std::string>();
      if (!known_.count(k)) {
        throw ConfigError("unknown key '" + k + "' in " + (path_.empty() ? "document" : path_),
                          line_at(where(k)));
      }
    }
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  int line() const { return line_at(path_); }
  const std::string& path() const { return path_; }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> known_;
};

void fail_unless(bool ok, const Section& s, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(s.where(key) + ": " + what, line_at(s.where(key)));
}

// Time-like inputs are given in `unit` and stored in atomic units.
double to_au(double t, const std::string& unit) { return unit == "fs" ? t / kAuTimeToFs : t; }
double from_au(double t, const std::string& unit) { return unit == "fs" ? t * kAuTimeToFs : t; }

int n_states_of(const ModelConfig& m) {
  switch (m.kind) {
    case ModelKind::Cavity:
      return static_cast<int>(m.cavity.levels.size());
    case ModelKind::Lvcm:
      return static_cast<int>(m.lvcm.vertical.size());
    default:
      return 2;
  }
}

ModelConfig parse_model(Section s) {
  ModelConfig m;
  const std::string kind = s.require<std::string>("kind");
  if (kind == "tully") {
    m.kind = ModelKind::Tully;
    TullyVariant v;
    try {
      v = parse_tully_variant(s.get<std::string>("variant", "SAC"));
    } catch (const DomainError& e) {
      throw ConfigError(s.where("variant") + ": " + e.what(), line_at(s.where("variant")));
    }
    TullyParams p = TullyParams::defaults(v);
    p.A = s.get("A", p.A);
    p.B = s.get("B", p.B);
    p.C = s.get("C", p.C);
    p.D = s.get("D", p.D);
    p.E0 = s.get("E0", p.E0);
    p.mass = s.get("mass", p.mass);
    p.alpha = s.get("alpha", p.alpha);
    p.R0 = s.get("R0", p.R0);
    p.P0 = s.get("P0", p.P0);
    fail_unless(p.mass > 0.0, s, "mass", "must be positive");
    fail_unless(p.alpha > 0.0, s, "alpha", "must be positive");
    m.tully = p;
  } else if (kind == "spin_boson") {
    m.kind = ModelKind::SpinBoson;
    SpinBosonParams& p = m.spin_boson;
    p.epsilon = s.get("epsilon", p.epsilon);
    p.delta = s.get("delta", p.delta);
    p.alpha = s.get("alpha", p.alpha);
    p.omega_c = s.get("omega_c", p.omega_c);
    p.beta = s.get("beta", p.beta);
    p.n_modes = s.get("n_modes", p.n_modes);
    fail_unless(p.n_modes >= 1, s, "n_modes", "must be >= 1");
    fail_unless(p.omega_c > 0.0, s, "omega_c", "must be positive");
    fail_unless(p.alpha >= 0.0, s, "alpha", "must be non-negative");
    fail_unless(p.beta > 0.0, s, "beta", "must be positive");
  } else if (kind == "cavity") {
    m.kind = ModelKind::Cavity;
    const std::string preset = s.get<std::string>("preset", "three_level");
    if (preset == "three_level") {
      m.cavity = CavityParams::three_level();
    } else if (preset == "two_level") {
      m.cavity = CavityParams::two_level();
    } else {
      throw ConfigError(s.where("preset") + ": expected three_level or two_level", line_at(s.where("preset")));
    }
    CavityParams& p = m.cavity;
    p.length = s.get("length", p.length);
    p.atom_position = s.get("atom_position", p.length / 2.0);
    p.n_modes = s.get("n_modes", p.n_modes);
    p.speed_of_light = s.get("speed_of_light", p.speed_of_light);
    fail_unless(p.n_modes >= 1, s, "n_modes", "must be >= 1");
    if (s.has("levels")) {
      p.levels = s.get("levels", p.levels);
      p.dipole = Mat::Zero(static_cast<Eigen::Index>(p.levels.size()), static_cast<Eigen::Index>(p.levels.size()));
    }
    if (s.has("dipoles")) {
      const auto rows = s.get("dipoles", std::vector<std::vector<double>>{});
      for (const auto& r : rows) {
        fail_unless(r.size() == 3, s, "dipoles", "entries are [n, m, value]");
        const int a = static_cast<int>(r[0]) - 1;
        const int b = static_cast<int>(r[1]) - 1;
        fail_unless(a >= 0 && b >= 0 && a < p.dipole.rows() && b < p.dipole.rows() && a != b, s, "dipoles",
                    "state index out of range");
        p.dipole(a, b) = p.dipole(b, a) = r[2];
      }
    } else {
      std::vector<std::vector<double>> rows;
      for (int a = 0; a < static_cast<int>(p.dipole.rows()); ++a) {
        for (int b = a + 1; b < p.dipole.rows(); ++b) rows.push_back({double(a + 1), double(b + 1), p.dipole(a, b)});
      }
      s.get("dipoles", rows);
    }
  } else if (kind == "lvcm") {
    m.kind = ModelKind::Lvcm;
    const std::string preset = s.get<std::string>("preset", "pyrazine");
    if (preset != "pyrazine") throw ConfigError(s.where("preset") + ": expected pyrazine", line_at(s.where("preset")));
    LvcmParams& p = m.lvcm;
    p.omega = s.get("omega", p.omega);
    p.vertical = s.get("vertical", p.vertical);
    p.kappa = s.get("kappa", p.kappa);
    std::vector<std::vector<double>> rows;
    for (const auto& o : p.lambda) rows.push_back({double(o.n + 1), double(o.m + 1), double(o.k + 1), o.value});
    rows = s.get("lambda", rows);
    p.lambda.clear();
    for (const auto& r : rows) {
      fail_unless(r.size() == 4, s, "lambda", "entries are [n, m, mode, value]");
      p.lambda.push_back({static_cast<int>(r[0]) - 1, static_cast<int>(r[1]) - 1, static_cast<int>(r[2]) - 1, r[3]});
    }
  } else if (kind == "two_level") {
    m.kind = ModelKind::TwoLevel;
    m.two_level_epsilon = s.get("epsilon", m.two_level_epsilon);
    m.two_level_delta = s.get("delta", m.two_level_delta);
  } else {
    throw ConfigError(s.where("kind") + ": unknown model '" + kind +
                          "' (expected tully, spin_boson, cavity, lvcm or two_level)",
                      s.line());
  }
  if (s.has("initial_state")) {
    const int n = s.get("initial_state", 1);
    fail_unless(n >= 1 && n <= n_states_of(m), s, "initial_state", "out of range (1-based)");
    m.initial_state = n - 1;
  }
  m.frozen = s.get("frozen", false);
  s.finish();
  try {
    (void)build_model(m);
  } catch (const DomainError& e) {
    throw ConfigError(s.path() + ": " + e.what(), line_at(s.where("kind")));
  }
  if (!m.initial_state) m.initial_state = build_model(m)->initial_state();
  s.set("initial_state", YAML::Node(*m.initial_state + 1));
  return m;
}

std::string default_time_unit(const ModelConfig& m) { return m.kind == ModelKind::Lvcm ? "fs" : "au"; }

/// Default integrator settings in atomic units.
IntegratorConfig default_integrator(const ModelConfig& m, Method method) {
  IntegratorConfig c;
  c.representation = method == Method::FSSH ? Representation::Adiabatic : Representation::Diabatic;
  switch (m.kind) {
    case ModelKind::Tully: {
      const TullyParams& p = m.tully;
      switch (p.variant) {
        case TullyVariant::SAC:
          c.dt = 1.0;
          c.exit_radius = 8.0;
          break;
        case TullyVariant::DAC:
          c.dt = 1.0;
          c.exit_radius = 14.0;
          break;
        case TullyVariant::ECR:
          c.dt = 0.5;
          c.exit_radius = 12.0;
          break;
      }
      // Time for the slowest relevant channel to leave the interaction region.
      const double v = std::max(std::abs(p.P0), 1.0) / p.mass;
      c.max_time = std::ceil(3.0 * (std::abs(p.R0) + c.exit_radius) / v / 100.0) * 100.0;
      break;
    }
    case ModelKind::SpinBoson:
      c.dt = 0.01;
      c.max_time = 15.0;
      break;
    case ModelKind::Cavity:
      c.dt = 0.05;
      c.max_time = 1000.0;
      break;
    case ModelKind::Lvcm:
      c.dt = 0.1 / kAuTimeToFs;
      c.max_time = 120.0 / kAuTimeToFs;
      break;
    case ModelKind::TwoLevel:
      c.dt = 0.01;
      c.max_time = 10.0;
      break;
  }
  return c;
}

std::vector<ObservableSpec> default_observables(const ModelConfig& m) {
  if (m.kind == ModelKind::Tully) {
    return {ObservableSpec::channels(Representation::Diabatic), ObservableSpec::channels(Representation::Adiabatic)};
  }
  std::vector<ObservableSpec> out;
  const int F = n_states_of(m);
  for (int n = 0; n < F; ++n) out.push_back(ObservableSpec::population(n));
  if (F == 2) out.push_back(ObservableSpec::difference(0, 1));
  return out;
}

YAML::Node observable_node(const ObservableSpec& o) {
  YAML::Node n(YAML::NodeType::Map);
  switch (o.kind) {
    case ObservableSpec::Kind::Population:
      n["population"] = o.n + 1;
      n["basis"] = to_string(o.basis);
      break;
    case ObservableSpec::Kind::PopulationDifference:
      n["difference"] = std::vector<int>{o.n + 1, o.m + 1};
      break;
    case ObservableSpec::Kind::ScatteringChannels:
      n["channels"] = to_string(o.basis);
      n["divide_R"] = o.divide_R;
      break;
  }
  return n;
}

Representation parse_rep(Section& s, const std::string& key, Representation def) {
  try {
    return parse_representation(s.get<std::string>(key, to_string(def)));
  } catch (const DomainError& e) {
    throw ConfigError(s.where(key) + ": " + e.what(), line_at(s.where(key)));
  }
}

std::vector<ObservableSpec> parse_observables(YAML::Node list, const ModelConfig& model) {
  const int F = n_states_of(model);
  std::vector<ObservableSpec> out;
  if (!list.IsSequence()) throw ConfigError("observables: expected a list", line_at("observables"));
  for (std::size_t i = 0; i < list.size(); ++i) {
    Section s(list[i], "observables[" + std::to_string(i) + "]");
    ObservableSpec o;
    if (s.has("population")) {
      o = ObservableSpec::population(s.get("population", 1) - 1, parse_rep(s, "basis", Representation::Diabatic));
    } else if (s.has("difference")) {
      const auto v = s.get("difference", std::vector<int>{});
      fail_unless(v.size() == 2, s, "difference", "expected [n1, n0]");
      o = ObservableSpec::difference(v[0] - 1, v[1] - 1);
    } else if (s.has("channels")) {
      o = ObservableSpec::channels(parse_rep(s, "channels", Representation::Diabatic), s.get("divide_R", 0.0));
      fail_unless(model.kind == ModelKind::Tully, s, "channels", "needs a one-dimensional scattering model");
    } else {
      throw ConfigError(s.path() + ": expected one of population, difference, channels", s.line());
    }
    s.finish();
    try {
      o.validate(F);
    } catch (const DomainError& e) {
      throw ConfigError(s.path() + ": " + e.what(), s.line());
    }
    out.push_back(o);
  }
  return out;
}

GammaScheme parse_gamma(Section& s, int F, bool pair, const std::string& key_single = "gamma") {
  try {
    if (pair) return GammaScheme::symmetric_pair(s.get("delta", 0.1), F);
    const YAML::Node g = s.raw(key_single);
    if (!g || (g.IsScalar() && g.Scalar() == "star")) {
      if (!g) s.set(key_single, YAML::Node("star"));
      return GammaScheme::single(gamma_star(F), F);
    }
    return GammaScheme::single(convert<double>(g, s.where(key_single)), F);
  } catch (const DomainError& e) {
    throw ConfigError(s.path() + ": " + e.what(), s.line());
  }
}

EnsembleConfig parse_ensemble(YAML::Node root, Section& method_s, const ModelConfig& model,
                              const std::string& unit) {
  EnsembleConfig cfg;
  const int F = n_states_of(model);
  try {
    cfg.method = parse_method(method_s.require<std::string>("name"));
  } catch (const DomainError& e) {
    throw ConfigError(method_s.where("name") + ": " + e.what(), line_at(method_s.where("name")));
  }
  if (cfg.method == Method::CMM) cfg.scheme = parse_gamma(method_s, F, false);
  if (cfg.method == Method::WMM) cfg.scheme = parse_gamma(method_s, F, true);
  IntegratorConfig def = default_integrator(model, cfg.method);
  if (cfg.method == Method::FSSH) def.frustrated_reversal = method_s.get("frustrated_reversal", true);
  method_s.finish();

  Section is(root["integrator"], "integrator");
  IntegratorConfig& ic = cfg.integrator;
  ic = def;
  ic.dt = to_au(is.get("dt", from_au(def.dt, unit)), unit);
  ic.max_time = to_au(is.get("max_time", from_au(def.max_time, unit)), unit);
  fail_unless(ic.dt > 0.0, is, "dt", "must be positive");
  fail_unless(ic.max_time >= 0.0, is, "max_time", "must be non-negative");
  const int default_stride = std::max(1, static_cast<int>(std::lround(ic.max_time / ic.dt / 200.0)));
  ic.record_stride = is.get("record_stride", default_stride);
  fail_unless(ic.record_stride >= 1, is, "record_stride", "must be >= 1");
  ic.representation = parse_rep(is, "representation", def.representation);
  ic.exit_radius = is.get("exit_radius", def.exit_radius);
  fail_unless(ic.exit_radius >= 0.0, is, "exit_radius", "must be non-negative");
  if (cfg.method == Method::FSSH) {
    fail_unless(ic.representation == Representation::Adiabatic, is, "representation",
                "fssh runs in the adiabatic representation");
  }
  is.finish();

  Section es(root["ensemble"], "ensemble");
  cfg.n_trajectories = es.get("n_trajectories", 1000L);
  fail_unless(cfg.n_trajectories >= 1, es, "n_trajectories", "must be >= 1");
  cfg.seed = es.get<std::uint64_t>("seed", 1);
  cfg.workers = es.get("workers", 1);
  fail_unless(cfg.workers >= 1, es, "workers", "must be >= 1");
  cfg.chunk_size = es.get("chunk_size", 256);
  fail_unless(cfg.chunk_size >= 1, es, "chunk_size", "must be >= 1");
  es.finish();

  if (root["observables"]) {
    cfg.observables = parse_observables(root["observables"], model);
  } else {
    cfg.observables = default_observables(model);
    YAML::Node list(YAML::NodeType::Sequence);
    for (const auto& o : cfg.observables) list.push_back(observable_node(o));
    root["observables"] = list;
  }
  return cfg;
}

OracleConfig parse_oracle(Section s, const ModelConfig& model, const std::string& unit) {
  OracleConfig o;
  const std::string def_kind = model.kind == ModelKind::Tully ? "dvr" : "fock";
  const std::string kind = s.get<std::string>("kind", def_kind);
  const int F = n_states_of(model);
  if (kind == "dvr") {
    o.kind = OracleConfig::Kind::Dvr;
    fail_unless(model.kind == ModelKind::Tully, s, "kind", "dvr needs a tully model");
    const TullyParams& p = model.tully;
    const GridSpec g = default_grid(p.variant, p.P0);
    o.grid.R_min = s.get("R_min", g.R_min);
    o.grid.R_max = s.get("R_max", g.R_max);
    o.grid.n_points = s.get("n_points", g.n_points);
    o.grid.dt = to_au(s.get("dt", from_au(g.dt, unit)), unit);
    o.dvr.divide_R = s.get("divide_R", 0.0);
    o.dvr.interaction_radius = s.get("interaction_radius", default_interaction_radius(p.variant));
    o.dvr.stop_tolerance = s.get("stop_tolerance", o.dvr.stop_tolerance);
    o.dvr.t_max = to_au(s.get("t_max", from_au(o.dvr.t_max, unit)), unit);
    o.dvr.record_dt = to_au(s.get("record_dt", from_au(o.dvr.record_dt, unit)), unit);
    o.dvr.boundary_tolerance = s.get("boundary_tolerance", o.dvr.boundary_tolerance);
    o.dt_gate_tolerance = s.get("dt_gate_tolerance", o.dt_gate_tolerance);
  } else if (kind == "fock") {
    o.kind = OracleConfig::Kind::Fock;
    fail_unless(model.kind != ModelKind::Tully, s, "kind", "fock needs a harmonic-bath model");
    const ModelPtr m = build_model(model);
    const int modes = m->n_dof();
    std::vector<int> def_nmax(static_cast<std::size_t>(modes), 10);
    if (model.kind == ModelKind::Lvcm && modes == 3) def_nmax = {26, 36, 26};
    if (model.kind == ModelKind::TwoLevel) def_nmax = {0};
    const YAML::Node nm = s.raw("n_max");
    if (!nm) {
      s.set("n_max", to_node(def_nmax));
      o.fock.n_max = def_nmax;
    } else if (nm.IsScalar()) {
      o.fock.n_max.assign(static_cast<std::size_t>(modes), convert<int>(nm, s.where("n_max")));
    } else {
      o.fock.n_max = convert<std::vector<int>>(nm, s.where("n_max"));
    }
    fail_unless(static_cast<int>(o.fock.n_max.size()) == modes, s, "n_max", "needs one entry per mode");
    o.fock.total_cap = s.get("total_cap", -1);
    o.fock_initial.electronic_state = model.initial_state.value_or(0);
    const bool thermal_default = model.kind == ModelKind::SpinBoson;
    o.fock_initial.thermal = s.get("thermal", thermal_default);
    o.fock_initial.beta = model.kind == ModelKind::SpinBoson ? model.spin_boson.beta
                                                              : std::numeric_limits<double>::infinity();
    fail_unless(!o.fock_initial.thermal || model.kind == ModelKind::SpinBoson, s, "thermal",
                "thermal initial states need a spin_boson model");
    o.fock_initial.thermal_tail = s.get("thermal_tail", o.fock_initial.thermal_tail);
    const double def_t = model.kind == ModelKind::Lvcm ? 120.0 / kAuTimeToFs : 10.0;
    const double def_rec = model.kind == ModelKind::Lvcm ? 1.0 / kAuTimeToFs : 0.1;
    o.fock_options.t_final = to_au(s.get("t_final", from_au(def_t, unit)), unit);
    o.fock_options.record_dt = to_au(s.get("record_dt", from_au(def_rec, unit)), unit);
    o.fock_options.convergence_gate = s.get("gate", true);
    o.fock_options.gate_tolerance = s.get("gate_tolerance", o.fock_options.gate_tolerance);
    o.fock_options.lanczos_tolerance = s.get("lanczos_tolerance", o.fock_options.lanczos_tolerance);
  } else if (kind == "frozen") {
    o.kind = OracleConfig::Kind::Frozen;
    o.t_final = to_au(s.get("t_final", from_au(10.0, unit)), unit);
    o.record_dt = to_au(s.get("record_dt", from_au(0.1, unit)), unit);
    fail_unless(o.t_final >= 0.0 && o.record_dt > 0.0, s, "record_dt", "invalid time grid");
  } else {
    throw ConfigError(s.where("kind") + ": expected dvr, fock or frozen", line_at(s.where("kind")));
  }
  (void)F;
  s.finish();
  return o;
}

MarginalsConfig parse_marginals(Section s) {
  MarginalsConfig c;
  const std::string kind = s.get<std::string>("kind", "closed_form");
  if (kind == "closed_form") {
    c.kind = MarginalsConfig::Kind::ClosedForm;
  } else if (kind == "monte_carlo") {
    c.kind = MarginalsConfig::Kind::MonteCarlo;
  } else if (kind == "hybrid") {
    c.kind = MarginalsConfig::Kind::Hybrid;
  } else {
    throw ConfigError(s.where("kind") + ": expected closed_form, monte_carlo or hybrid", line_at(s.where("kind")));
  }
  c.F = s.get("F", 2);
  fail_unless(c.F >= 2, s, "F", "must be >= 2");
  fail_unless(c.kind == MarginalsConfig::Kind::MonteCarlo || c.F == 2, s, "F",
              "closed forms and hybrid grids are for F = 2");
  const bool pair = s.has("delta");
  c.scheme = parse_gamma(s, c.F, pair);

  if (c.kind == MarginalsConfig::Kind::Hybrid) {
    try {
      c.state = parse_hybrid_state(s.get<std::string>("state", "bell"));
    } catch (const DomainError& e) {
      throw ConfigError(s.where("state") + ": " + e.what(), line_at(s.where("state")));
    }
    const double extent = s.get("extent", 3.0);
    const int points = s.get("points", 25);
    fail_unless(extent > 0.0 && points >= 1, s, "points", "invalid grid");
    c.R_axis = {-extent, extent, points};
    c.P_axis = {-extent, extent, points};
    const auto pt = s.get("point", std::vector<double>{0.5, 0.5});
    fail_unless(pt.size() == 2, s, "point", "expected [x1, x2]");
    c.point_x1 = pt[0];
    c.point_x2 = pt[1];
  } else {
    std::vector<std::vector<int>> def_entries;
    for (int n = 0; n < c.F; ++n) {
      for (int m = n; m < c.F; ++m) def_entries.push_back({n + 1, m + 1});
    }
    for (const auto& e : s.get("entries", def_entries)) {
      fail_unless(e.size() == 2 && e[0] >= 1 && e[1] >= 1 && e[0] <= c.F && e[1] <= c.F, s, "entries",
                  "expected [n, m] pairs within 1..F");
      c.entries.emplace_back(e[0] - 1, e[1] - 1);
    }
    const auto axes = s.get("axes", std::vector<std::string>{"x1", "x2"});
    fail_unless(axes.size() == 2, s, "axes", "expected two axes");
    try {
      c.first = PhaseAxis::parse(axes[0]);
      c.second = PhaseAxis::parse(axes[1]);
    } catch (const DomainError& e) {
      throw ConfigError(s.where("axes") + ": " + e.what(), line_at(s.where("axes")));
    }
    fail_unless(c.first.index < c.F && c.second.index < c.F, s, "axes", "index exceeds F");
    if (c.kind == MarginalsConfig::Kind::ClosedForm) {
      fail_unless(!c.first.momentum && c.first.index == 0 && c.second.index == 1, s, "axes",
                  "closed forms are tabulated on (x1, x2) and (x1, p2)");
    }
    const double extent = s.get("extent", support_radius(c.scheme));
    const int points = s.get("points", 41);
    fail_unless(extent > 0.0 && points >= 1, s, "points", "invalid grid");
    c.axis1 = {-extent, extent, points};
    c.axis2 = {-extent, extent, points};
    c.scaled = s.get("scaled", true);
    if (c.kind == MarginalsConfig::Kind::MonteCarlo) {
      c.n_samples = s.get("n_samples", c.n_samples);
      fail_unless(c.n_samples >= 2, s, "n_samples", "must be >= 2");
    }
  }
  // Seed and workers live in `ensemble`.
  s.finish();
  return c;
}

SweepConfig parse_sweep(Section s) {
  SweepConfig c;
  c.parameter = s.require<std::string>("parameter");
  const YAML::Node v = s.raw("values");
  if (!v || !v.IsSequence()) throw ConfigError(s.where("values") + ": expected a list", line_at(s.where("values")));
  if (v.size() == 0) throw ConfigError(s.where("values") + ": empty value list", line_at(s.where("values")));
  for (std::size_t i = 0; i < v.size(); ++i) c.values.push_back(YAML::Clone(v[i]));
  const std::string target = s.get<std::string>("target", "ensemble");
  fail_unless(target == "ensemble" || target == "oracle", s, "target", "expected ensemble or oracle");
  c.oracle = target == "oracle";
  s.finish();
  return c;
}

}  // namespace

ModelPtr build_model(const ModelConfig& cfg) {
  std::shared_ptr<DiabaticModel> m;
  switch (cfg.kind) {
    case ModelKind::Tully:
      m = build_tully(cfg.tully);
      break;
    case ModelKind::SpinBoson:
      m = build_spin_boson(cfg.spin_boson);
      break;
    case ModelKind::Cavity:
      m = build_cavity(cfg.cavity);
      break;
    case ModelKind::Lvcm:
      m = build_lvcm(cfg.lvcm);
      break;
    case ModelKind::TwoLevel:
      m = build_two_level(cfg.two_level_epsilon, cfg.two_level_delta);
      break;
  }
  if (cfg.initial_state) m->set_initial_state(*cfg.initial_state);
  if (!cfg.frozen) return m;
  Vec R0(m->n_dof());
  for (int k = 0; k < m->n_dof(); ++k) R0(k) = m->nuclear_init()[k].mean_R;
  auto frozen = std::make_shared<FrozenModel>(m, R0);
  return frozen;
}

LineMap index_lines(const YAML::Node& root) {
  LineMap out;
  auto mark = [](const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; };
  std::function<void(const YAML::Node&, const std::string&)> walk = [&](const YAML::Node& n,
                                                                         const std::string& prefix) {
    if (n.IsMap()) {
      for (auto it = n.begin(); it != n.end(); ++it) {
        const std::string path = (prefix.empty() ? "" : prefix + ".") + it->first.as<std::string>();
        out[path] = mark(it->first);
        walk(it->second, path);
      }
    } else if (n.IsSequence()) {
      for (std::size_t i = 0; i < n.size(); ++i) {
        const std::string path = prefix + "[" + std::to_string(i) + "]";
        out[path] = mark(n[i]);
        walk(n[i], path);
      }
    }
  };
  walk(root, "");
  return out;
}

RunConfig parse_config(const YAML::Node& input, const LineMap* lines) {
  LineMap own;
  if (lines == nullptr) {
    own = index_lines(input);
    lines = &own;
  }
  struct Scope {
    const LineMap* saved = g_lines;
    explicit Scope(const LineMap* l) { g_lines = l; }
    ~Scope() { g_lines = saved; }
  } scope(lines);

  RunConfig rc;
  YAML::Node root = YAML::Clone(input);
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  Section top(root, "");

  if (top.has("model")) rc.model = parse_model(top.sub("model"));
  Section out = top.sub("output");
  rc.output_directory = out.get<std::string>("directory", "out");
  const std::string def_unit = rc.model ? default_time_unit(*rc.model) : "au";
  rc.time_unit = out.get<std::string>("time_unit", def_unit);
  fail_unless(rc.time_unit == "au" || rc.time_unit == "fs", out, "time_unit", "expected au or fs");
  const bool normalize = out.get("normalize", false);
  out.finish();

  if (top.has("method")) {
    if (!rc.model) throw ConfigError("method: needs a model section", line_at("method"));
    Section ms = top.sub("method");
    top.raw("integrator");
    top.raw("ensemble");
    top.raw("observables");
    rc.ensemble = parse_ensemble(root, ms, *rc.model, rc.time_unit);
    rc.ensemble->normalize = normalize;
  } else {
    for (const char* k : {"integrator", "observables"}) {
      if (top.has(k)) throw ConfigError(std::string(k) + ": needs a method section", line_at(k));
    }
  }
  if (top.has("oracle")) {
    if (!rc.model) throw ConfigError("oracle: needs a model section", line_at("oracle"));
    rc.oracle = parse_oracle(top.sub("oracle"), *rc.model, rc.time_unit);
  }
  if (top.has("marginals")) rc.marginals = parse_marginals(top.sub("marginals"));
  if (top.has("sweep")) rc.sweep = parse_sweep(top.sub("sweep"));

  // `ensemble` may appear alone to carry seed and workers for marginals.
  if (rc.ensemble) {
    if (rc.marginals) {
      rc.marginals->seed = rc.ensemble->seed;
      rc.marginals->workers = rc.ensemble->workers;
    }
  } else if (top.has("ensemble") || rc.marginals) {
    Section es = top.sub("ensemble");
    const auto seed = es.get<std::uint64_t>("seed", 1);
    const int w = es.get("workers", 1);
    fail_unless(w >= 1, es, "workers", "must be >= 1");
    es.finish();
    if (rc.marginals) {
      rc.marginals->seed = seed;
      rc.marginals->workers = w;
    }
  }
  top.finish();
  rc.source = YAML::Clone(input);
  rc.resolved = root;
  return rc;
}

RunConfig load_config_file(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError("cannot read config file " + path);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line + 1);
  }
  return parse_config(root);
}

RunConfig load_config_string(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line + 1);
  }
  return parse_config(root);
}

void set_config_value(YAML::Node& root, const std::string& dotted_key, const YAML::Node& value) {
  if (dotted_key.empty()) throw ConfigError("empty configuration key");
  if (!root.IsDefined() || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  YAML::Node cur = root;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted_key.find('.', start);
    const std::string part = dotted_key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("malformed configuration key '" + dotted_key + "'");
    if (!cur.IsMap() && !cur.IsNull()) throw ConfigError("'" + dotted_key + "' does not address a mapping");
    if (dot == std::string::npos) {
      cur[part] = YAML::Clone(value);
      return;
    }
    if (!cur[part] || cur[part].IsNull()) cur[part] = YAML::Node(YAML::NodeType::Map);
    YAML::Node next = cur[part];
    cur.reset(next);
    start = dot + 1;
  }
}

void set_config_value(YAML::Node& root, const std::string& dotted_key, const std::string& text) {
  YAML::Node v;
  try {
    v = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("value for '" + dotted_key + "': " + e.msg);
  }
  set_config_value(root, dotted_key, v);
}

std::string emit_yaml(const YAML::Node& node) {
  YAML::Emitter e;
  e.SetDoublePrecision(15);
  e << node;
  return std::string(e.c_str()) + "\n";
}

}  // namespace cpsdyn
