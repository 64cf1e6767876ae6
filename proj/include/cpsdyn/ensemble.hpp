// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cpsdyn/dynamics.hpp"
#include "cpsdyn/estimators.hpp"

namespace cpsdyn {

enum class Method { CMM, WMM, Ehrenfest, FSSH };

Method parse_method(const std::string& name);
std::string to_string(Method m);

struct EnsembleConfig {
  Method method = Method::CMM;
  /// Required for CMM and wMM; ignored otherwise.
  std::optional<GammaScheme> scheme;
  long n_trajectories = 1000;
  std::uint64_t seed = 1;
  int workers = 1;
  /// Trajectories per reduction block. Fixed so that results do not depend
  /// on the worker count.
  int chunk_size = 256;
  bool normalize = false;
  std::vector<ObservableSpec> observables;
  IntegratorConfig integrator;
};

/// Builds trajectory `index` of an ensemble: nuclear Wigner sample,
/// electronic initial condition and its total signed weight.
///
/// wMM pairs trajectories 2k and 2k+1 on the same random stream so the two
/// gamma branches see identical nuclear samples and sphere directions. The
/// branch weight is scaled by N / N_branch so that the plain mean over all
/// trajectories is unbiased.
struct TrajectoryStart {
  TrajectoryState state;
  double weight = 1.0;
  Rng rng{0};
};

TrajectoryStart make_trajectory_start(const DiabaticModel& model, const EnsembleConfig& cfg,
                                      long index);

Propagation propagation_for(Method m);

struct EnsembleDiagnostics {
  double max_energy_drift = 0.0;
  double mean_energy_drift = 0.0;
  std::string first_failure;
};

EnsembleSeries run_ensemble(const ModelPtr& model, const EnsembleConfig& cfg,
                            EnsembleDiagnostics* diagnostics = nullptr);

}  // namespace cpsdyn
