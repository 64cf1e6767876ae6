// SPDX-License-Identifier: Apache-2.0
//
// Benchmark composite-system Hamiltonians
//
//   H = P^T M^-1 P / 2 + sum_nm V_nm(R) |n><m|
//
// in the diabatic representation. Any state-independent nuclear potential
// (harmonic bath or field energy) sits on the diagonal of V.
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cpsdyn/common.hpp"
#include "cpsdyn/rng.hpp"

namespace cpsdyn {

/// Gaussian Wigner distribution of one nuclear degree of freedom.
struct GaussianDof {
  double mean_R = 0.0;
  double mean_P = 0.0;
  double var_R = 0.5;
  double var_P = 0.5;
};

using InitialNuclearSpec = std::vector<GaussianDof>;

class DiabaticModel {
 public:
  virtual ~DiabaticModel() = default;

  int n_states() const noexcept { return n_states_; }
  int n_dof() const noexcept { return n_dof_; }
  /// Diagonal of M^-1.
  const Vec& inverse_mass() const noexcept { return inverse_mass_; }
  const InitialNuclearSpec& nuclear_init() const noexcept { return nuclear_init_; }
  /// Initially occupied diabatic state (0-based).
  int initial_state() const noexcept { return initial_state_; }
  const std::string& kind() const noexcept { return kind_; }

  virtual void potential(const Vec& R, Mat& V) const = 0;
  /// dV[l] = dV / dR_l, each F x F symmetric.
  virtual void gradient(const Vec& R, std::vector<Mat>& dV) const = 0;
  /// out_l = sum_nm dV_nm/dR_l * rho_mn, with rho real symmetric.
  /// The default contracts `gradient`; models with structure override it.
  virtual void contract_gradient(const Vec& R, const Mat& rho, Vec& out) const;
  virtual ParameterDump parameters() const = 0;

  void set_initial_state(int n);
  void set_nuclear_init(InitialNuclearSpec spec);

 protected:
  DiabaticModel(std::string kind, int n_states, int n_dof);

  std::string kind_;
  int n_states_;
  int n_dof_;
  int initial_state_ = 0;
  Vec inverse_mass_;
  InitialNuclearSpec nuclear_init_;
};

using ModelPtr = std::shared_ptr<const DiabaticModel>;

// ---------------------------------------------------------------------------
// Tully scattering models (1 nuclear DOF, 2 states, atomic units).

enum class TullyVariant { SAC, DAC, ECR };

TullyVariant parse_tully_variant(const std::string& name);
std::string to_string(TullyVariant v);

struct TullyParams {
  TullyVariant variant = TullyVariant::SAC;
  double A = 0.01;
  double B = 1.6;
  double C = 0.005;
  double D = 1.0;
  double E0 = 0.0;
  double mass = 2000.0;
  double alpha = 1.0;  // wavepacket width parameter
  double R0 = -3.8;
  double P0 = 10.0;

  /// Literature constants and start position for the variant.
  static TullyParams defaults(TullyVariant v);
};

class TullyModel final : public DiabaticModel {
 public:
  explicit TullyModel(const TullyParams& p);
  void potential(const Vec& R, Mat& V) const override;
  void gradient(const Vec& R, std::vector<Mat>& dV) const override;
  ParameterDump parameters() const override;
  const TullyParams& params() const noexcept { return p_; }

 private:
  TullyParams p_;
};

std::shared_ptr<TullyModel> build_tully(const TullyParams& params);

// ---------------------------------------------------------------------------
// Models whose V(R) is at most linear in each mode plus a state-independent
// harmonic term:
//
//   V(R) = V0 + sum_k C_k R_k + (1/2) sum_k kappa_k R_k^2 * I
//
// with kinetic energy (1/2) sum_k mu_k P_k^2. Spin-boson, cavity and LVCM are
// all of this form, which the Fock oracle relies on.

struct LinearHarmonicForm {
  Mat V0;
  std::vector<Mat> C;  // one F x F matrix per mode
  Vec kappa;           // harmonic curvature per mode
  Vec mu;              // inverse mass per mode

  int n_states() const { return static_cast<int>(V0.rows()); }
  int n_modes() const { return static_cast<int>(kappa.size()); }
  /// sqrt(mu_k kappa_k)
  double frequency(int k) const;
};

class LinearHarmonicModel final : public DiabaticModel {
 public:
  LinearHarmonicModel(std::string kind, LinearHarmonicForm form, ParameterDump params);
  void potential(const Vec& R, Mat& V) const override;
  void gradient(const Vec& R, std::vector<Mat>& dV) const override;
  void contract_gradient(const Vec& R, const Mat& rho, Vec& out) const override;
  ParameterDump parameters() const override { return params_; }
  const LinearHarmonicForm& form() const noexcept { return form_; }

 private:
  LinearHarmonicForm form_;
  ParameterDump params_;
  // Couplings stored as (mode, n, m, value) with n <= m for fast contraction.
  struct Entry {
    int mode;
    int n;
    int m;
    double value;
  };
  std::vector<Entry> entries_;
};

/// Thermal (or ground-state when beta is infinite) Wigner Gaussian of the
/// oscillator (1/2) mu P^2 + (1/2) kappa R^2.
GaussianDof thermal_wigner(double mu, double kappa, double beta);

struct SpinBosonParams {
  double epsilon = 1.0;
  double delta = 1.0;  // tunnelling
  double alpha = 0.1;  // Kondo parameter
  double omega_c = 1.0;
  double beta = 5.0;
  int n_modes = 300;
};

/// Ohmic discretization: omega_j = -omega_c ln(1 - j/(1+N)),
/// c_j = omega_j sqrt(alpha omega_c / (1+N)).
std::pair<Vec, Vec> ohmic_modes(const SpinBosonParams& p);

std::shared_ptr<LinearHarmonicModel> build_spin_boson(const SpinBosonParams& p);

struct CavityParams {
  std::vector<double> levels{-0.6738, -0.2798, -0.1547};
  /// Symmetric transition dipoles; only n != m entries are used.
  Mat dipole;
  double length = 236200.0;
  std::optional<double> atom_position;  // defaults to length / 2
  int n_modes = 400;
  double speed_of_light = kSpeedOfLightAu;

  /// Three-level atom: mu12 = -1.034, mu23 = -2.536, mu13 = 0.
  static CavityParams three_level();
  /// Reduced model using the two lowest levels and mu12.
  static CavityParams two_level();
};

/// lambda_j(r0) = sqrt(2 / (eps0 L)) sin(j pi r0 / L), eps0 = 1/(4 pi) a.u.
double cavity_coupling(int j, double r0, double length);

std::shared_ptr<LinearHarmonicModel> build_cavity(const CavityParams& p);

struct LvcmParams {
  // All energies in eV; converted at build time.
  std::vector<double> omega{0.126, 0.074, 0.118};
  std::vector<double> vertical{3.94, 4.84};
  /// kappa[n][k]
  std::vector<std::vector<double>> kappa{{0.037, -0.105, 0.0}, {-0.254, 0.149, 0.0}};
  /// Off-diagonal couplings as (n, m, k, value), n != m.
  struct OffDiagonal {
    int n;
    int m;
    int k;
    double value;
  };
  std::vector<OffDiagonal> lambda{{0, 1, 2, 0.262}};
  int initial_state = 1;

  static LvcmParams pyrazine() { return {}; }
};

std::shared_ptr<LinearHarmonicModel> build_lvcm(const LvcmParams& p);

/// Constant two-level V = [[eps, delta], [delta, -eps]] with one inert
/// nuclear coordinate (zero inverse mass, zero gradient).
std::shared_ptr<LinearHarmonicModel> build_two_level(double epsilon, double delta);

/// Wraps a model so that V(R) = V(R_frozen) and all gradients vanish.
class FrozenModel final : public DiabaticModel {
 public:
  FrozenModel(ModelPtr base, Vec R_frozen);
  void potential(const Vec& R, Mat& V) const override;
  void gradient(const Vec& R, std::vector<Mat>& dV) const override;
  void contract_gradient(const Vec& R, const Mat& rho, Vec& out) const override;
  ParameterDump parameters() const override;

 private:
  ModelPtr base_;
  Vec R_frozen_;
  Mat V_;
};

// ---------------------------------------------------------------------------

struct AdiabaticData {
  Vec E;               // ascending adiabatic energies
  Mat U;               // columns are eigenvectors
  std::vector<Mat> d;  // d[l](k, j) = <phi_k | d phi_j / dR_l>
};

inline constexpr double kDegeneracyThreshold = 1e-12;

/// Diagonalizes V and builds nonadiabatic couplings from the
/// Hellmann-Feynman form d_kj = (U^T dV U)_kj / (E_j - E_k). Column signs
/// follow `previous_U` by overlap; without it the first non-negligible
/// component of each column is made positive.
AdiabaticData adiabatize(const Mat& V, const std::vector<Mat>& dV, const Mat* previous_U = nullptr);

/// Independent Gaussian draws per DOF from the model's initial Wigner spec.
std::pair<Vec, Vec> sample_nuclear_initial(const DiabaticModel& model, Rng& rng);

}  // namespace cpsdyn
