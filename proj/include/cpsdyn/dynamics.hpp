// SPDX-License-Identifier: Apache-2.0
//
// Trajectory integrators. Mapping dynamics (CMM, wMM, Ehrenfest) and FSSH
// share one symmetric splitting per step of size h:
//
//   kick(h/2) . rotate(h/2, R0) . drift(h) . rotate(h/2, R1) . kick(h/2)
//
// where rotate applies the exact electronic propagator at fixed nuclear
// coordinates. The composition is time-reversible and second order.
#pragma once

#include <functional>
#include <string>

#include "cpsdyn/models.hpp"
#include "cpsdyn/phasespace.hpp"

namespace cpsdyn {

enum class Representation { Diabatic, Adiabatic };

Representation parse_representation(const std::string& name);
std::string to_string(Representation r);

/// Mapping covers CMM, wMM and Ehrenfest (which is mapping dynamics with
/// gamma = 0 and g = sqrt(2) c). SurfaceHopping is FSSH.
enum class Propagation { Mapping, SurfaceHopping };

struct IntegratorConfig {
  double dt = 1.0;
  Representation representation = Representation::Diabatic;
  double max_time = 0.0;
  int record_stride = 1;
  /// When > 0, a trajectory with |R| beyond this radius and moving outward
  /// stops evolving its electronic state and drifts ballistically.
  double exit_radius = 0.0;
  /// FSSH: reverse the velocity component along d on frustrated hops when
  /// the target-surface force opposes it.
  bool frustrated_reversal = true;

  int n_steps() const;
  int n_records() const { return n_steps() / record_stride + 1; }
};

struct TrajectoryState {
  Vec R;
  Vec P;  // kinematic momentum in both representations
  /// Mapping variables, always stored in the diabatic basis.
  ElectronicMappingState mapping;
  /// FSSH adiabatic amplitudes.
  CVec c;
  int active = -1;
  double t = 0.0;
  bool exited = false;
};

/// exp(-i V dt) for real symmetric V.
CMat electronic_propagator(const Mat& V, double dt);

/// Per-trajectory integrator. Holds the potential, adiabatic data and force
/// at the current nuclear position so each step costs one evaluation.
class Integrator {
 public:
  Integrator(ModelPtr model, Propagation propagation, IntegratorConfig cfg);

  /// Evaluate caches at the state's coordinates. Must precede `step`.
  void start(TrajectoryState& s);
  /// Advance by `h` (may be negative for reversal checks).
  void step(TrajectoryState& s, Rng* rng, double h);
  void step(TrajectoryState& s, Rng* rng) { step(s, rng, cfg_.dt); }

  /// Mapping: P M^-1 P / 2 + g^T V g / 2 - gamma tr V.
  /// FSSH: P M^-1 P / 2 + E_active.
  double energy(const TrajectoryState& s) const;

  /// Adiabatic data at the last evaluated position (computed on demand).
  const AdiabaticData& adiabatic();
  const Mat& potential() const noexcept { return V_; }
  const IntegratorConfig& config() const noexcept { return cfg_; }
  const DiabaticModel& model() const noexcept { return *model_; }

 private:
  bool uses_adiabatic() const noexcept {
    return propagation_ == Propagation::SurfaceHopping ||
           cfg_.representation == Representation::Adiabatic;
  }
  void evaluate(const Vec& R);
  void refresh_force(const TrajectoryState& s);
  void rotate_diabatic(TrajectoryState& s, double h);
  void rotate_adiabatic(CVec& amplitudes, const Vec& velocity, double h) const;
  void step_mapping_diabatic(TrajectoryState& s, double h);
  void step_mapping_adiabatic(TrajectoryState& s, double h);
  void step_fssh(TrajectoryState& s, Rng* rng, double h);
  void try_hop(TrajectoryState& s, Rng& rng, double h);
  double active_gradient(int active, int l) const;

  ModelPtr model_;
  Propagation propagation_;
  IntegratorConfig cfg_;

  Vec R_eval_;
  Mat V_;
  std::vector<Mat> dV_;
  AdiabaticData ad_;
  bool ad_valid_ = false;
  bool have_U_ = false;
  Vec grad_;  // dH/dR at the current state
  bool grad_valid_ = false;
  CMat half_prop_;
  double half_prop_h_ = 0.0;
  bool half_prop_valid_ = false;
  // workspace
  Mat rho_;
  CVec gt_;
  Vec velocity_;
};

struct TrajectoryRecord {
  int n_records = 0;
  double initial_energy = 0.0;
  double max_relative_drift = 0.0;
  bool failed = false;
  std::string failure;
};

using TrajectorySink = std::function<void(int record_index, const TrajectoryState&, Integrator&)>;

/// Steps from t = 0 to cfg.max_time, calling `sink` at step 0 and every
/// record_stride steps. Step errors (non-finite state, degeneracy) mark the
/// record failed instead of propagating.
TrajectoryRecord run_trajectory(ModelPtr model, Propagation propagation, TrajectoryState init,
                                const IntegratorConfig& cfg, Rng* rng, const TrajectorySink& sink);

}  // namespace cpsdyn
