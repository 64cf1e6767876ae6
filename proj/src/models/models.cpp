// SPDX-License-Identifier: Apache-2.0
#include "cpsdyn/models.hpp"
#include "cpsdyn/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace cpsdyn {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

DiabaticModel::DiabaticModel(std::string kind, int n_states, int n_dof)
    : kind_(std::move(kind)),
      n_states_(n_states),
      n_dof_(n_dof),
      inverse_mass_(Vec::Ones(n_dof)),
      nuclear_init_(static_cast<std::size_t>(n_dof)) {}

void DiabaticModel::contract_gradient(const Vec& R, const Mat& rho, Vec& out) const {
  std::vector<Mat> dV;
  gradient(R, dV);
  out.resize(n_dof_);
  for (int l = 0; l < n_dof_; ++l) out(l) = (dV[l].array() * rho.array()).sum();
}

void DiabaticModel::set_initial_state(int n) {
  if (n < 0 || n >= n_states_) {
    throw DomainError("initial state " + std::to_string(n) + " out of range for F=" +
                      std::to_string(n_states_));
  }
  initial_state_ = n;
}

void DiabaticModel::set_nuclear_init(InitialNuclearSpec spec) {
  if (static_cast<int>(spec.size()) != n_dof_) {
    throw DomainError("initial nuclear spec has wrong DOF count");
  }
  for (const auto& g : spec) {
    if (!(g.var_R > 0.0 && g.var_P > 0.0)) throw DomainError("Wigner variances must be positive");
  }
  nuclear_init_ = std::move(spec);
}

// ---------------------------------------------------------------------------

TullyVariant parse_tully_variant(const std::string& name) {
  if (name == "SAC" || name == "sac") return TullyVariant::SAC;
  if (name == "DAC" || name == "dac") return TullyVariant::DAC;
  if (name == "ECR" || name == "ecr") return TullyVariant::ECR;
  throw DomainError("unknown Tully variant '" + name + "' (expected SAC, DAC or ECR)");
}

std::string to_string(TullyVariant v) {
  switch (v) {
    case TullyVariant::SAC:
      return "SAC";
    case TullyVariant::DAC:
      return "DAC";
    case TullyVariant::ECR:
      return "ECR";
  }
  return "?";
}

TullyParams TullyParams::defaults(TullyVariant v) {
  TullyParams p;
  p.variant = v;
  switch (v) {
    case TullyVariant::SAC:
      p.A = 0.01;
      p.B = 1.6;
      p.C = 0.005;
      p.D = 1.0;
      p.E0 = 0.0;
      p.R0 = -3.8;
      break;
    case TullyVariant::DAC:
      p.A = 0.10;
      p.B = 0.28;
      p.E0 = 0.05;
      p.C = 0.015;
      p.D = 0.06;
      p.R0 = -10.0;
      break;
    case TullyVariant::ECR:
      p.A = 0.0;
      p.D = 0.0;
      p.E0 = -0.0006;
      p.B = 0.9;
      p.C = 0.1;
      p.R0 = -13.0;
      break;
  }
  return p;
}

TullyModel::TullyModel(const TullyParams& p) : DiabaticModel("tully", 2, 1), p_(p) {
  if (!(p.mass > 0.0) || !(p.alpha > 0.0)) throw DomainError("Tully mass and alpha must be positive");
  inverse_mass_(0) = 1.0 / p.mass;
  // Wigner transform of exp(-alpha (R-R0)^2/2 + i (R-R0) P0).
  nuclear_init_[0] = GaussianDof{p.R0, p.P0, 1.0 / (2.0 * p.alpha), p.alpha / 2.0};
}

void TullyModel::potential(const Vec& Rv, Mat& V) const {
  const double R = Rv(0);
  V.resize(2, 2);
  switch (p_.variant) {
    case TullyVariant::SAC: {
      const double v11 = std::copysign(p_.A * (1.0 - std::exp(-p_.B * std::abs(R))), R);
      V(0, 0) = v11;
      V(1, 1) = -v11;
      V(0, 1) = V(1, 0) = p_.C * std::exp(-p_.D * R * R);
      break;
    }
    case TullyVariant::DAC:
      V(0, 0) = 0.0;
      V(1, 1) = -p_.A * std::exp(-p_.B * R * R) + p_.E0;
      V(0, 1) = V(1, 0) = p_.C * std::exp(-p_.D * R * R);
      break;
    case TullyVariant::ECR: {
      V(0, 0) = p_.E0;
      V(1, 1) = -p_.E0;
      // Both branches equal C at R = 0.
      const double v12 = R < 0.0 ? p_.C * std::exp(p_.B * R) : p_.C * (2.0 - std::exp(-p_.B * R));
      V(0, 1) = V(1, 0) = v12;
      break;
    }
  }
}

void TullyModel::gradient(const Vec& Rv, std::vector<Mat>& dV) const {
  const double R = Rv(0);
  dV.resize(1);
  Mat& G = dV[0];
  G.setZero(2, 2);
  switch (p_.variant) {
    case TullyVariant::SAC: {
      const double d11 = p_.A * p_.B * std::exp(-p_.B * std::abs(R));
      G(0, 0) = d11;
      G(1, 1) = -d11;
      G(0, 1) = G(1, 0) = -2.0 * p_.D * R * p_.C * std::exp(-p_.D * R * R);
      break;
    }
    case TullyVariant::DAC:
      G(1, 1) = 2.0 * p_.A * p_.B * R * std::exp(-p_.B * R * R);
      G(0, 1) = G(1, 0) = -2.0 * p_.D * R * p_.C * std::exp(-p_.D * R * R);
      break;
    case TullyVariant::ECR:
      G(0, 1) = G(1, 0) = p_.C * p_.B * std::exp(-p_.B * std::abs(R));
      break;
  }
}

ParameterDump TullyModel::parameters() const {
  return {{"model", "tully"},      {"variant", to_string(p_.variant)},
          {"A", num(p_.A)},        {"B", num(p_.B)},
          {"C", num(p_.C)},        {"D", num(p_.D)},
          {"E0", num(p_.E0)},      {"mass", num(p_.mass)},
          {"alpha", num(p_.alpha)}, {"R0", num(p_.R0)},
          {"P0", num(p_.P0)}};
}

std::shared_ptr<TullyModel> build_tully(const TullyParams& params) {
  return std::make_shared<TullyModel>(params);
}

// ---------------------------------------------------------------------------

double LinearHarmonicForm::frequency(int k) const { return std::sqrt(mu(k) * kappa(k)); }

LinearHarmonicModel::LinearHarmonicModel(std::string kind, LinearHarmonicForm form,
                                         ParameterDump params)
    : DiabaticModel(std::move(kind), form.n_states(), form.n_modes()),
      form_(std::move(form)),
      params_(std::move(params)) {
  const int F = n_states_;
  if (static_cast<int>(form_.C.size()) != n_dof_ || form_.mu.size() != n_dof_) {
    throw DomainError("linear-harmonic form: inconsistent mode counts");
  }
  inverse_mass_ = form_.mu;
  for (int k = 0; k < n_dof_; ++k) {
    const Mat& Ck = form_.C[k];
    if (Ck.rows() != F || Ck.cols() != F) throw DomainError("coupling matrix has wrong shape");
    if (!Ck.allFinite()) throw DomainError("non-finite coupling");
    for (int n = 0; n < F; ++n) {
      for (int m = n; m < F; ++m) {
        if (Ck(n, m) != 0.0) entries_.push_back({k, n, m, Ck(n, m)});
      }
    }
  }
}

void LinearHarmonicModel::potential(const Vec& R, Mat& V) const {
  V = form_.V0;
  for (const auto& e : entries_) {
    const double v = e.value * R(e.mode);
    V(e.n, e.m) += v;
    if (e.n != e.m) V(e.m, e.n) += v;
  }
  const double harmonic = 0.5 * (form_.kappa.array() * R.array().square()).sum();
  V.diagonal().array() += harmonic;
}

void LinearHarmonicModel::gradient(const Vec& R, std::vector<Mat>& dV) const {
  dV.resize(n_dof_);
  for (int k = 0; k < n_dof_; ++k) {
    dV[k] = form_.C[k];
    dV[k].diagonal().array() += form_.kappa(k) * R(k);
  }
}

void LinearHarmonicModel::contract_gradient(const Vec& R, const Mat& rho, Vec& out) const {
  out = form_.kappa.cwiseProduct(R) * rho.trace();
  for (const auto& e : entries_) {
    out(e.mode) += e.n == e.m ? e.value * rho(e.n, e.n) : e.value * (rho(e.n, e.m) + rho(e.m, e.n));
  }
}

GaussianDof thermal_wigner(double mu, double kappa, double beta) {
  if (!(mu > 0.0 && kappa > 0.0)) throw DomainError("thermal Wigner needs positive mu and kappa");
  const double omega = std::sqrt(mu * kappa);
  const double x = beta * omega / 2.0;
  const double coth = std::isinf(beta) || x > 20.0 ? 1.0 : 1.0 / std::tanh(x);
  return GaussianDof{0.0, 0.0, coth * mu / (2.0 * omega), coth * omega / (2.0 * mu)};
}

std::pair<Vec, Vec> ohmic_modes(const SpinBosonParams& p) {
  if (p.n_modes < 1 || !(p.omega_c > 0.0) || p.alpha < 0.0) {
    throw DomainError("spin-boson needs N_b >= 1, omega_c > 0, alpha >= 0");
  }
  const int N = p.n_modes;
  Vec omega(N), c(N);
  const double scale = std::sqrt(p.alpha * p.omega_c / (1.0 + N));
  for (int j = 1; j <= N; ++j) {
    omega(j - 1) = -p.omega_c * std::log(1.0 - static_cast<double>(j) / (1.0 + N));
    c(j - 1) = omega(j - 1) * scale;
  }
  return {omega, c};
}

std::shared_ptr<LinearHarmonicModel> build_spin_boson(const SpinBosonParams& p) {
  const auto [omega, c] = ohmic_modes(p);
  const int N = p.n_modes;
  LinearHarmonicForm form;
  form.V0.resize(2, 2);
  form.V0 << p.epsilon, p.delta, p.delta, -p.epsilon;
  form.C.resize(N);
  form.kappa = omega.array().square();
  form.mu = Vec::Ones(N);
  for (int j = 0; j < N; ++j) {
    form.C[j] = Mat::Zero(2, 2);
    form.C[j](0, 0) = -c(j);
    form.C[j](1, 1) = c(j);
  }
  ParameterDump dump{{"model", "spin_boson"},       {"epsilon", num(p.epsilon)},
                     {"delta", num(p.delta)},       {"alpha", num(p.alpha)},
                     {"omega_c", num(p.omega_c)},   {"beta", num(p.beta)},
                     {"n_modes", std::to_string(N)}};
  auto model = std::make_shared<LinearHarmonicModel>("spin_boson", std::move(form), std::move(dump));
  InitialNuclearSpec init(N);
  for (int j = 0; j < N; ++j) init[j] = thermal_wigner(1.0, omega(j) * omega(j), p.beta);
  model->set_nuclear_init(std::move(init));
  model->set_initial_state(0);
  return model;
}

CavityParams CavityParams::three_level() {
  CavityParams p;
  p.levels = {-0.6738, -0.2798, -0.1547};
  p.dipole = Mat::Zero(3, 3);
  p.dipole(0, 1) = p.dipole(1, 0) = -1.034;
  p.dipole(1, 2) = p.dipole(2, 1) = -2.536;
  return p;
}

CavityParams CavityParams::two_level() {
  CavityParams p;
  p.levels = {-0.6738, -0.2798};
  p.dipole = Mat::Zero(2, 2);
  p.dipole(0, 1) = p.dipole(1, 0) = -1.034;
  return p;
}

double cavity_coupling(int j, double r0, double length) {
  const double eps0 = 1.0 / (4.0 * kPi);
  return std::sqrt(2.0 / (eps0 * length)) * std::sin(j * kPi * r0 / length);
}

std::shared_ptr<LinearHarmonicModel> build_cavity(const CavityParams& p) {
  const int F = static_cast<int>(p.levels.size());
  const double r0 = p.atom_position.value_or(p.length / 2.0);
  if (p.n_modes < 1 || !(p.length > 0.0) || !(r0 > 0.0 && r0 < p.length)) {
    throw DomainError("cavity needs N_modes >= 1, L > 0 and 0 < r0 < L");
  }
  if (F < 2 || p.dipole.rows() != F || p.dipole.cols() != F) {
    throw DomainError("cavity dipole matrix must be F x F with F >= 2");
  }
  const int N = p.n_modes;
  LinearHarmonicForm form;
  form.V0 = Mat::Zero(F, F);
  for (int n = 0; n < F; ++n) form.V0(n, n) = p.levels[n];
  form.C.resize(N);
  form.kappa.resize(N);
  form.mu = Vec::Ones(N);
  InitialNuclearSpec init(N);
  for (int j = 1; j <= N; ++j) {
    const double omega = j * kPi * p.speed_of_light / p.length;
    const double g = omega * cavity_coupling(j, r0, p.length);
    Mat Cj = Mat::Zero(F, F);
    for (int n = 0; n < F; ++n) {
      for (int m = 0; m < F; ++m) {
        if (n != m) Cj(n, m) = g * p.dipole(n, m);
      }
    }
    // sin(j pi / 2) is ~1e-17 rather than 0 for even j at the centre.
    Cj = (Cj.array().abs() < 1e-14 * std::abs(omega)).select(0.0, Cj);
    form.C[j - 1] = Cj;
    form.kappa(j - 1) = omega * omega;
    init[j - 1] = thermal_wigner(1.0, omega * omega, std::numeric_limits<double>::infinity());
  }
  ParameterDump dump{{"model", "cavity"}, {"levels", std::to_string(F)},
                     {"length", num(p.length)}, {"atom_position", num(r0)},
                     {"n_modes", std::to_string(N)}, {"speed_of_light", num(p.speed_of_light)}};
  for (int n = 0; n < F; ++n) dump.emplace_back("epsilon" + std::to_string(n + 1), num(p.levels[n]));
  for (int n = 0; n < F; ++n) {
    for (int m = n + 1; m < F; ++m) {
      dump.emplace_back("mu" + std::to_string(n + 1) + std::to_string(m + 1), num(p.dipole(n, m)));
    }
  }
  auto model = std::make_shared<LinearHarmonicModel>("cavity", std::move(form), std::move(dump));
  model->set_nuclear_init(std::move(init));
  model->set_initial_state(F - 1);
  return model;
}

std::shared_ptr<LinearHarmonicModel> build_lvcm(const LvcmParams& p) {
  const int F = static_cast<int>(p.vertical.size());
  const int N = static_cast<int>(p.omega.size());
  if (F < 1 || N < 1 || static_cast<int>(p.kappa.size()) != F) {
    throw DomainError("LVCM: inconsistent state/mode dimensions");
  }
  LinearHarmonicForm form;
  form.V0 = Mat::Zero(F, F);
  for (int n = 0; n < F; ++n) form.V0(n, n) = p.vertical[n] * kEvToHartree;
  form.C.assign(N, Mat::Zero(F, F));
  form.kappa.resize(N);
  for (int k = 0; k < N; ++k) form.kappa(k) = p.omega[k] * kEvToHartree;
  form.mu = form.kappa;  // weighted modes: omega (P^2 + R^2) / 2
  for (int n = 0; n < F; ++n) {
    if (static_cast<int>(p.kappa[n].size()) != N) throw DomainError("LVCM: kappa row length != modes");
    for (int k = 0; k < N; ++k) form.C[k](n, n) = p.kappa[n][k] * kEvToHartree;
  }
  for (const auto& od : p.lambda) {
    if (od.n == od.m || od.n < 0 || od.m < 0 || od.n >= F || od.m >= F || od.k < 0 || od.k >= N) {
      throw DomainError("LVCM: invalid off-diagonal coupling index");
    }
    form.C[od.k](od.n, od.m) = form.C[od.k](od.m, od.n) = od.value * kEvToHartree;
  }
  ParameterDump dump{{"model", "lvcm"}, {"units", "eV in, hartree internal"},
                     {"n_states", std::to_string(F)}, {"n_modes", std::to_string(N)}};
  for (int k = 0; k < N; ++k) dump.emplace_back("omega" + std::to_string(k + 1) + "_eV", num(p.omega[k]));
  for (int n = 0; n < F; ++n) {
    dump.emplace_back("E" + std::to_string(n + 1) + "_eV", num(p.vertical[n]));
    for (int k = 0; k < N; ++k) {
      dump.emplace_back("kappa" + std::to_string(k + 1) + "_" + std::to_string(n + 1) + "_eV",
                        num(p.kappa[n][k]));
    }
  }
  for (const auto& od : p.lambda) {
    dump.emplace_back("lambda" + std::to_string(od.k + 1) + "_" + std::to_string(od.n + 1) +
                          std::to_string(od.m + 1) + "_eV",
                      num(od.value));
  }
  auto model = std::make_shared<LinearHarmonicModel>("lvcm", std::move(form), std::move(dump));
  InitialNuclearSpec init(N, GaussianDof{0.0, 0.0, 0.5, 0.5});
  model->set_nuclear_init(std::move(init));
  model->set_initial_state(p.initial_state);
  return model;
}

std::shared_ptr<LinearHarmonicModel> build_two_level(double epsilon, double delta) {
  LinearHarmonicForm form;
  form.V0.resize(2, 2);
  form.V0 << epsilon, delta, delta, -epsilon;
  form.C = {Mat::Zero(2, 2)};
  form.kappa = Vec::Zero(1);
  form.mu = Vec::Zero(1);
  ParameterDump dump{{"model", "two_level"}, {"epsilon", num(epsilon)}, {"delta", num(delta)}};
  auto model = std::make_shared<LinearHarmonicModel>("two_level", std::move(form), std::move(dump));
  model->set_initial_state(0);
  return model;
}

// ---------------------------------------------------------------------------

FrozenModel::FrozenModel(ModelPtr base, Vec R_frozen)
    : DiabaticModel("frozen:" + base->kind(), base->n_states(), base->n_dof()),
      base_(std::move(base)),
      R_frozen_(std::move(R_frozen)) {
  base_->potential(R_frozen_, V_);
  inverse_mass_ = base_->inverse_mass();
  nuclear_init_ = base_->nuclear_init();
  initial_state_ = base_->initial_state();
}

void FrozenModel::potential(const Vec&, Mat& V) const { V = V_; }

void FrozenModel::gradient(const Vec&, std::vector<Mat>& dV) const {
  dV.assign(n_dof_, Mat::Zero(n_states_, n_states_));
}

void FrozenModel::contract_gradient(const Vec&, const Mat&, Vec& out) const {
  out = Vec::Zero(n_dof_);
}

ParameterDump FrozenModel::parameters() const {
  ParameterDump d = base_->parameters();
  d.emplace_back("frozen_nuclei", "true");
  return d;
}

// ---------------------------------------------------------------------------

AdiabaticData adiabatize(const Mat& V, const std::vector<Mat>& dV, const Mat* previous_U) {
  AdiabaticData out;
  const auto F = V.rows();
  symmetric_eigen(V, out.E, out.U);
  for (Eigen::Index k = 0; k + 1 < F; ++k) {
    if (out.E(k + 1) - out.E(k) < kDegeneracyThreshold) {
      throw DegeneracyError("degenerate adiabatic energies at states " + std::to_string(k) + "," +
                            std::to_string(k + 1));
    }
  }
  for (Eigen::Index k = 0; k < F; ++k) {
    double ref = 0.0;
    if (previous_U != nullptr) {
      ref = previous_U->col(k).dot(out.U.col(k));
    } else {
      for (Eigen::Index n = 0; n < F; ++n) {
        if (std::abs(out.U(n, k)) > 1e-12) {
          ref = out.U(n, k);
          break;
        }
      }
    }
    if (ref < 0.0) out.U.col(k) *= -1.0;
  }
  out.d.resize(dV.size());
  for (std::size_t l = 0; l < dV.size(); ++l) {
    Mat G = out.U.transpose() * dV[l] * out.U;
    Mat& d = out.d[l];
    d.setZero(F, F);
    for (Eigen::Index k = 0; k < F; ++k) {
      for (Eigen::Index j = k + 1; j < F; ++j) {
        d(k, j) = G(k, j) / (out.E(j) - out.E(k));
        d(j, k) = -d(k, j);
      }
    }
  }
  return out;
}

std::pair<Vec, Vec> sample_nuclear_initial(const DiabaticModel& model, Rng& rng) {
  const int N = model.n_dof();
  Vec R(N), P(N);
  const auto& spec = model.nuclear_init();
  for (int l = 0; l < N; ++l) {
    R(l) = spec[l].mean_R + std::sqrt(spec[l].var_R) * rng.normal();
    P(l) = spec[l].mean_P + std::sqrt(spec[l].var_P) * rng.normal();
  }
  return {R, P};
}

}  // namespace cpsdyn
