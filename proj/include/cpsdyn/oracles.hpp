// SPDX-License-Identifier: Apache-2.0
//
// Exact quantum references at desk scale.
#pragma once

#include <cstdint>
#include <vector>

#include "cpsdyn/estimators.hpp"
#include "cpsdyn/models.hpp"

namespace cpsdyn {

/// |<n| exp(-i V t) |psi0>|^2 for each n.
Vec frozen_nuclei_exact(const Mat& V, const CVec& psi0, double t);

// ---------------------------------------------------------------------------
// Split-operator propagation of a two-component wavepacket on a 1-D grid.

struct GridSpec {
  double R_min = -40.0;
  double R_max = 40.0;
  int n_points = 2048;
  double dt = 1.0;
};

struct Wavepacket {
  double alpha = 1.0;
  double R0 = -3.8;
  double P0 = 10.0;
  int init_state = 0;
};

struct DvrOptions {
  double divide_R = 0.0;
  /// The run stops once the probability inside |R| < interaction_radius
  /// falls below stop_tolerance, or at t_max.
  double interaction_radius = 5.0;
  double stop_tolerance = 1e-3;
  double t_max = 20000.0;
  double record_dt = 50.0;
  /// Probability allowed in the outer 5% of the grid on each side.
  double boundary_tolerance = 1e-6;
};

struct DvrResult {
  /// Columns P1, P2, T1, T2, R1, R2, T1_adia, T2_adia, R1_adia, R2_adia,
  /// total; errors are zero.
  EnsembleSeries series;
  double t_final = 0.0;
  double norm_error = 0.0;       // max |norm - 1| over the run
  double boundary_weight = 0.0;  // max outer-strip probability seen
};

/// Grid and interaction radius suited to a Tully variant at momentum P0.
GridSpec default_grid(TullyVariant v, double P0);
double default_interaction_radius(TullyVariant v);

DvrResult split_operator_dvr(const DiabaticModel& model, const Wavepacket& packet,
                             const GridSpec& grid, const DvrOptions& options);

/// Runs at grid.dt and grid.dt / 2 and requires the final channel values to
/// agree within `tolerance`. Returns the finer run.
DvrResult split_operator_dvr_converged(const DiabaticModel& model, const Wavepacket& packet,
                                       const GridSpec& grid, const DvrOptions& options,
                                       double tolerance = 1e-4);

// ---------------------------------------------------------------------------
// Truncated Fock-space propagation for linear-harmonic models.

struct FockSpec {
  std::vector<int> n_max;  // per mode
  int total_cap = -1;      // max total quanta; negative disables
};

/// Basis |n> (x) |occupations> with sparse H built from ladder operators:
/// R_k = sqrt(mu_k / (2 omega_k)) (a_k + a_k^+).
class FockSpace {
 public:
  FockSpace(const LinearHarmonicModel& model, FockSpec spec);

  long dimension() const noexcept { return static_cast<long>(n_states_) * n_fock(); }
  long n_fock() const noexcept { return static_cast<long>(occupations_.size()); }
  /// Index of (state, occupation tuple), or -1 when outside the basis.
  long index(int state, const std::vector<int>& occ) const;
  const std::vector<int>& occupation(long fock_index) const { return occupations_[fock_index]; }

  void apply_hamiltonian(const CVec& in, CVec& out) const;
  double energy(const CVec& psi) const;
  /// <R_k>
  double position(const CVec& psi, int k) const;
  Vec populations(const CVec& psi) const;

  /// psi <- exp(-i H t) psi by short-iterative Lanczos with adaptive
  /// substeps. `tolerance` bounds the Krylov residual per substep.
  void propagate(CVec& psi, double t, double tolerance = 1e-10) const;

 private:
  long encode(const std::vector<int>& occ) const;

  int n_states_;
  int n_modes_;
  FockSpec spec_;
  Mat V0_;
  Vec omega_;
  Vec scale_;
  std::vector<std::vector<int>> occupations_;
  std::vector<long> lookup_;  // mixed-radix code -> fock index or -1
  std::vector<long> radix_;
  // Off-diagonal ladder structure: for each fock index and mode, the index
  // of the state with one more quantum (or -1).
  std::vector<long> raise_;
  struct Coupling {
    int mode;
    int n;
    int m;
    double value;
  };
  std::vector<Coupling> couplings_;
};

/// Initial nuclear condition for the Fock oracle.
struct FockInitial {
  int electronic_state = 0;
  /// Inverse temperature; infinite selects the vacuum.
  double beta = 0.0;
  bool thermal = false;
  /// Thermal unraveling keeps the most probable occupation tuples until
  /// their summed Boltzmann weight reaches 1 - thermal_tail.
  double thermal_tail = 1e-4;
};

struct FockOptions {
  double t_final = 10.0;
  double record_dt = 0.1;
  /// Gate: rerun with every n_max + 2 and require populations to agree.
  bool convergence_gate = true;
  double gate_tolerance = 1e-3;
  double lanczos_tolerance = 1e-10;
};

struct FockResult {
  EnsembleSeries series;  // P1..PF, D12 (if F = 2), total
  long dimension = 0;
  int n_initial_states = 0;
  double truncated_weight = 0.0;  // Boltzmann weight left out
  double gate_difference = 0.0;
};

FockResult fock_propagate(const LinearHarmonicModel& model, const FockSpec& spec,
                          const FockInitial& init, const FockOptions& options);

}  // namespace cpsdyn
