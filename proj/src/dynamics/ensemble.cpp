// SPDX-License-Identifier: Apache-2.0
#include "cpsdyn/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

namespace cpsdyn {

Method parse_method(const std::string& name) {
  if (name == "cmm") return Method::CMM;
  if (name == "wmm") return Method::WMM;
  if (name == "ehrenfest") return Method::Ehrenfest;
  if (name == "fssh") return Method::FSSH;
  throw DomainError("unknown method '" + name + "' (expected cmm, wmm, ehrenfest or fssh)");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::CMM:
      return "cmm";
    case Method::WMM:
      return "wmm";
    case Method::Ehrenfest:
      return "ehrenfest";
    case Method::FSSH:
      return "fssh";
  }
  return "?";
}

Propagation propagation_for(Method m) {
  return m == Method::FSSH ? Propagation::SurfaceHopping : Propagation::Mapping;
}

namespace {

void check_config(const DiabaticModel& model, const EnsembleConfig& cfg) {
  if (cfg.n_trajectories < 1) throw DomainError("n_trajectories must be >= 1");
  if (cfg.chunk_size < 1) throw DomainError("chunk_size must be >= 1");
  if (cfg.method == Method::CMM || cfg.method == Method::WMM) {
    if (!cfg.scheme) throw DomainError("mapping methods need a gamma scheme");
    if (cfg.scheme->n_states() != model.n_states()) {
      throw DomainError("gamma scheme state count does not match the model");
    }
    if (cfg.method == Method::WMM && !cfg.scheme->is_pair()) {
      throw DomainError("wmm needs a symmetric-pair gamma scheme");
    }
    if (cfg.method == Method::CMM && cfg.scheme->is_pair()) {
      throw DomainError("cmm needs a single gamma value");
    }
  }
  for (const auto& o : cfg.observables) {
    o.validate(model.n_states());
    if (o.kind == ObservableSpec::Kind::ScatteringChannels && model.n_dof() != 1) {
      throw DomainError("scattering channels need a one-dimensional nuclear model");
    }
  }
  if (cfg.method == Method::FSSH && cfg.integrator.representation != Representation::Adiabatic) {
    throw DomainError("fssh runs in the adiabatic representation");
  }
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct ChunkResult {
  explicit ChunkResult(int cols, int times) : acc(cols, times) {}
  SeriesAccumulator acc;
  long failed = 0;
  double max_drift = 0.0;
  double drift_sum = 0.0;
  std::string first_failure;
};

}  // namespace

TrajectoryStart make_trajectory_start(const DiabaticModel& model, const EnsembleConfig& cfg,
                                      long index) {
  const int F = model.n_states();
  const int n0 = model.initial_state();
  const bool paired = cfg.method == Method::WMM;
  const long stream = paired ? index / 2 : index;
  const int branch = paired ? static_cast<int>(index % 2) : 0;

  TrajectoryStart out;
  out.rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(stream));
  Rng& rng = out.rng;
  auto [R, P] = sample_nuclear_initial(model, rng);
  out.state.R = std::move(R);
  out.state.P = std::move(P);

  switch (cfg.method) {
    case Method::CMM:
    case Method::WMM: {
      Vec direction(2 * F);
      for (auto& v : direction) v = rng.normal();
      const GammaDraw draw = draw_gamma(*cfg.scheme, branch);
      double branch_scale = 1.0;
      if (paired) {
        const long n_branch = branch == 0 ? (cfg.n_trajectories + 1) / 2 : cfg.n_trajectories / 2;
        branch_scale = static_cast<double>(cfg.n_trajectories) / static_cast<double>(n_branch);
      }
      out.state.mapping = project_to_sphere(direction, draw.gamma);
      out.state.mapping.weight = branch_scale * draw.weight;
      out.weight = out.state.mapping.weight * initial_electronic_weight(out.state.mapping, n0);
      break;
    }
    case Method::Ehrenfest: {
      ElectronicMappingState m;
      m.x = Vec::Zero(F);
      m.p = Vec::Zero(F);
      m.x(n0) = std::sqrt(2.0);
      m.gamma = 0.0;
      m.weight = 1.0;
      out.state.mapping = m;
      out.weight = 1.0;
      break;
    }
    case Method::FSSH: {
      Mat V;
      std::vector<Mat> dV;
      model.potential(out.state.R, V);
      model.gradient(out.state.R, dV);
      const AdiabaticData ad = adiabatize(V, dV);
      out.state.c = ad.U.row(n0).transpose().cast<cplx>();
      const double xi = rng.uniform();
      double cumulative = 0.0;
      out.state.active = F - 1;
      for (int k = 0; k < F; ++k) {
        cumulative += std::norm(out.state.c(k));
        if (xi < cumulative) {
          out.state.active = k;
          break;
        }
      }
      out.weight = 1.0;
      break;
    }
  }
  return out;
}

EnsembleSeries run_ensemble(const ModelPtr& model, const EnsembleConfig& cfg,
                            EnsembleDiagnostics* diagnostics) {
  check_config(*model, cfg);
  const int F = model->n_states();
  const int n_cols = total_columns(cfg.observables, F);
  const int n_times = cfg.integrator.n_records();
  const Propagation propagation = propagation_for(cfg.method);
  const long n_chunks = (cfg.n_trajectories + cfg.chunk_size - 1) / cfg.chunk_size;

  std::vector<ChunkResult> chunks;
  chunks.reserve(static_cast<std::size_t>(n_chunks));
  for (long c = 0; c < n_chunks; ++c) chunks.emplace_back(n_cols, n_times);

  auto run_chunk = [&](long c) {
    ChunkResult& out = chunks[static_cast<std::size_t>(c)];
    Mat sample(n_cols, n_times);
    const long begin = c * cfg.chunk_size;
    const long end = std::min(cfg.n_trajectories, begin + cfg.chunk_size);
    for (long i = begin; i < end; ++i) {
      TrajectoryStart start;
      TrajectoryRecord rec;
      try {
        start = make_trajectory_start(*model, cfg, i);
      } catch (const std::exception& e) {
        rec.failed = true;
        rec.failure = e.what();
      }
      if (!rec.failed) {
        const double w = start.weight;
        sample.setZero();
        rec = run_trajectory(
            model, propagation, std::move(start.state), cfg.integrator, &start.rng,
            [&](int r, const TrajectoryState& s, Integrator& integ) {
              evaluate_observables(cfg.observables, propagation, s, integ, sample.col(r).data());
              sample.col(r) *= w;
            });
      }
      if (rec.failed) {
        ++out.failed;
        if (out.first_failure.empty()) {
          out.first_failure = "trajectory " + std::to_string(i) + ": " + rec.failure;
        }
        continue;
      }
      out.acc.add(sample);
      out.max_drift = std::max(out.max_drift, rec.max_relative_drift);
      out.drift_sum += rec.max_relative_drift;
    }
  };

  const int workers = static_cast<int>(std::clamp<long>(cfg.workers, 1, n_chunks));
  if (workers == 1) {
    for (long c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (long c = next++; c < n_chunks; c = next++) run_chunk(c);
      });
    }
    for (auto& t : pool) t.join();
  }

  SeriesAccumulator total(n_cols, n_times);
  long failed = 0;
  double max_drift = 0.0;
  double drift_sum = 0.0;
  std::string first_failure;
  for (const auto& c : chunks) {
    total.merge(c.acc);
    failed += c.failed;
    max_drift = std::max(max_drift, c.max_drift);
    drift_sum += c.drift_sum;
    if (first_failure.empty()) first_failure = c.first_failure;
  }

  EnsembleSeries series;
  series.n_trajectories = cfg.n_trajectories;
  series.n_failed = failed;
  if (total.count() == 0) {
    throw std::runtime_error("all trajectories failed; first: " + first_failure);
  }
  total.finish(series.values, series.errors);
  series.times.resize(n_times);
  const double record_dt = cfg.integrator.dt * cfg.integrator.record_stride;
  for (int j = 0; j < n_times; ++j) series.times(j) = j * record_dt;
  for (const auto& o : cfg.observables) {
    for (auto& n : o.column_names(F)) series.names.push_back(std::move(n));
  }
  series.names.emplace_back("total");
  if (cfg.normalize) normalize_by_total(series);

  const double mean_drift = drift_sum / static_cast<double>(total.count());
  auto& md = series.metadata;
  for (const auto& kv : model->parameters()) md.emplace_back("model." + kv.first, kv.second);
  md.emplace_back("method", to_string(cfg.method));
  if (cfg.scheme && (cfg.method == Method::CMM || cfg.method == Method::WMM)) {
    md.emplace_back("gamma_scheme", describe(*cfg.scheme));
  }
  md.emplace_back("initial_state", std::to_string(model->initial_state() + 1));
  md.emplace_back("seed", std::to_string(cfg.seed));
  md.emplace_back("dt", num(cfg.integrator.dt));
  md.emplace_back("max_time", num(cfg.integrator.max_time));
  md.emplace_back("record_stride", std::to_string(cfg.integrator.record_stride));
  md.emplace_back("representation", to_string(cfg.integrator.representation));
  if (cfg.integrator.exit_radius > 0.0) md.emplace_back("exit_radius", num(cfg.integrator.exit_radius));
  if (cfg.method == Method::FSSH) {
    md.emplace_back("frustrated_reversal", cfg.integrator.frustrated_reversal ? "true" : "false");
  }
  md.emplace_back("estimator", cfg.normalize ? "normalized" : "raw");
  md.emplace_back("chunk_size", std::to_string(cfg.chunk_size));
  md.emplace_back("max_energy_drift", num(max_drift));
  md.emplace_back("mean_energy_drift", num(mean_drift));

  if (diagnostics != nullptr) {
    diagnostics->max_energy_drift = max_drift;
    diagnostics->mean_energy_drift = mean_drift;
    diagnostics->first_failure = first_failure;
  }
  return series;
}

}  // namespace cpsdyn
