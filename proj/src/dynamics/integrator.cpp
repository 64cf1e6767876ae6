// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cpsdyn/dynamics.hpp"
#include "cpsdyn/linalg.hpp"

namespace cpsdyn {

Representation parse_representation(const std::string& name) {
  if (name == "diabatic") return Representation::Diabatic;
  if (name == "adiabatic") return Representation::Adiabatic;
  throw DomainError("unknown representation '" + name + "' (expected diabatic or adiabatic)");
}

std::string to_string(Representation r) {
  return r == Representation::Diabatic ? "diabatic" : "adiabatic";
}

int IntegratorConfig::n_steps() const {
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  if (max_time < 0.0) throw DomainError("max_time must be non-negative");
  return static_cast<int>(std::floor(max_time / dt + 1e-9));
}

CMat electronic_propagator(const Mat& V, double dt) { return real_symmetric_propagator(V, dt); }

Integrator::Integrator(ModelPtr model, Propagation propagation, IntegratorConfig cfg)
    : model_(std::move(model)), propagation_(propagation), cfg_(cfg) {
  if (!model_) throw std::invalid_argument("integrator needs a model");
  if (cfg_.record_stride < 1) throw DomainError("record_stride must be >= 1");
}

void Integrator::evaluate(const Vec& R) {
  R_eval_ = R;
  model_->potential(R, V_);
  half_prop_valid_ = false;
  grad_valid_ = false;
  ad_valid_ = false;
  if (uses_adiabatic()) {
    model_->gradient(R, dV_);
    Mat previous;
    if (have_U_) previous = ad_.U;
    ad_ = adiabatize(V_, dV_, have_U_ ? &previous : nullptr);
    ad_valid_ = true;
    have_U_ = true;
  }
}

const AdiabaticData& Integrator::adiabatic() {
  // After exit the electronic state is held at the exit point, so the
  // basis is taken there too.
  if (!ad_valid_) {
    model_->gradient(R_eval_, dV_);
    Mat previous;
    if (have_U_) previous = ad_.U;
    ad_ = adiabatize(V_, dV_, have_U_ ? &previous : nullptr);
    ad_valid_ = true;
    have_U_ = true;
  }
  return ad_;
}

double Integrator::active_gradient(int active, int l) const {
  const auto u = ad_.U.col(active);
  return u.dot(dV_[l] * u);
}

void Integrator::refresh_force(const TrajectoryState& s) {
  const int N = model_->n_dof();
  grad_.resize(N);
  if (propagation_ == Propagation::SurfaceHopping) {
    for (int l = 0; l < N; ++l) grad_(l) = active_gradient(s.active, l);
  } else {
    const auto& m = s.mapping;
    rho_.noalias() = 0.5 * (m.x * m.x.transpose() + m.p * m.p.transpose());
    rho_.diagonal().array() -= m.gamma;
    if (uses_adiabatic()) {
      for (int l = 0; l < N; ++l) grad_(l) = (dV_[l].array() * rho_.array()).sum();
    } else {
      model_->contract_gradient(s.R, rho_, grad_);
    }
  }
  grad_valid_ = true;
}

void Integrator::start(TrajectoryState& s) {
  const int F = model_->n_states();
  const int N = model_->n_dof();
  if (s.R.size() != N || s.P.size() != N) throw DomainError("nuclear state has wrong dimension");
  if (propagation_ == Propagation::Mapping) {
    if (s.mapping.n_states() != F || s.mapping.p.size() != F) {
      throw DomainError("mapping state has wrong dimension");
    }
  } else if (s.c.size() != F || s.active < 0 || s.active >= F) {
    throw DomainError("FSSH state needs F amplitudes and a valid active surface");
  }
  have_U_ = false;
  evaluate(s.R);
  refresh_force(s);
}

void Integrator::rotate_diabatic(TrajectoryState& s, double h) {
  if (!half_prop_valid_ || half_prop_h_ != h) {
    half_prop_ = electronic_propagator(V_, 0.5 * h);
    half_prop_h_ = h;
    half_prop_valid_ = true;
  }
  auto& m = s.mapping;
  gt_ = m.x.cast<cplx>() + cplx(0.0, 1.0) * m.p.cast<cplx>();
  gt_ = half_prop_ * gt_;
  m.x = gt_.real();
  m.p = gt_.imag();
}

void Integrator::rotate_adiabatic(CVec& amplitudes, const Vec& velocity, double h) const {
  const auto F = ad_.E.size();
  CMat Veff = CMat::Zero(F, F);
  Veff.diagonal() = ad_.E.cast<cplx>();
  Mat coupling = Mat::Zero(F, F);
  for (std::size_t l = 0; l < ad_.d.size(); ++l) coupling += velocity(l) * ad_.d[l];
  Veff -= cplx(0.0, 1.0) * coupling.cast<cplx>();
  amplitudes = hermitian_propagator(Veff, 0.5 * h) * amplitudes;
}

void Integrator::step_mapping_diabatic(TrajectoryState& s, double h) {
  const Vec& mu = model_->inverse_mass();
  s.P -= 0.5 * h * grad_;
  rotate_diabatic(s, h);
  s.R += h * mu.cwiseProduct(s.P);
  evaluate(s.R);
  rotate_diabatic(s, h);
  refresh_force(s);
  s.P -= 0.5 * h * grad_;
}

void Integrator::step_mapping_adiabatic(TrajectoryState& s, double h) {
  const Vec& mu = model_->inverse_mass();
  auto& m = s.mapping;
  s.P -= 0.5 * h * grad_;
  velocity_ = mu.cwiseProduct(s.P);
  CVec g = m.x.cast<cplx>() + cplx(0.0, 1.0) * m.p.cast<cplx>();
  gt_ = ad_.U.transpose().cast<cplx>() * g;
  rotate_adiabatic(gt_, velocity_, h);
  s.R += h * velocity_;
  evaluate(s.R);
  rotate_adiabatic(gt_, velocity_, h);
  g = ad_.U.cast<cplx>() * gt_;
  m.x = g.real();
  m.p = g.imag();
  refresh_force(s);
  s.P -= 0.5 * h * grad_;
}

void Integrator::step_fssh(TrajectoryState& s, Rng* rng, double h) {
  const Vec& mu = model_->inverse_mass();
  s.P -= 0.5 * h * grad_;
  velocity_ = mu.cwiseProduct(s.P);
  rotate_adiabatic(s.c, velocity_, h);
  s.R += h * velocity_;
  evaluate(s.R);
  rotate_adiabatic(s.c, velocity_, h);
  refresh_force(s);
  s.P -= 0.5 * h * grad_;
  if (rng != nullptr) try_hop(s, *rng, h);
}

void Integrator::try_hop(TrajectoryState& s, Rng& rng, double h) {
  const int F = model_->n_states();
  const int N = model_->n_dof();
  const Vec& mu = model_->inverse_mass();
  const int a = s.active;
  const double pa = std::norm(s.c(a));
  const double xi = rng.uniform();
  if (pa < 1e-300) return;
  velocity_ = mu.cwiseProduct(s.P);
  double cumulative = 0.0;
  int target = -1;
  for (int l = 0; l < F; ++l) {
    if (l == a) continue;
    double vd = 0.0;
    for (int j = 0; j < N; ++j) vd += velocity_(j) * ad_.d[j](a, l);
    // Population flux out of a into l over the step.
    const double g = 2.0 * h * (std::conj(s.c(a)) * s.c(l)).real() * vd / pa;
    cumulative += std::max(0.0, g);
    if (xi < cumulative) {
      target = l;
      break;
    }
  }
  if (target < 0) return;

  Vec d(N);
  for (int j = 0; j < N; ++j) d(j) = ad_.d[j](a, target);
  const double qa = 0.5 * (mu.array() * d.array().square()).sum();
  const double b = velocity_.dot(d);
  if (qa < 1e-300) return;
  const double dE = ad_.E(target) - ad_.E(a);
  const double disc = b * b - 4.0 * qa * dE;
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    const double alpha = b >= 0.0 ? (b - root) / (2.0 * qa) : (b + root) / (2.0 * qa);
    s.P -= alpha * d;
    s.active = target;
    refresh_force(s);
    return;
  }
  if (cfg_.frustrated_reversal) {
    double target_force_d = 0.0;
    for (int j = 0; j < N; ++j) target_force_d -= active_gradient(target, j) * d(j);
    if (target_force_d * b < 0.0) s.P -= (b / qa) * d;
  }
}

void Integrator::step(TrajectoryState& s, Rng* rng, double h) {
  const Vec& mu = model_->inverse_mass();
  if (s.exited) {
    s.R += h * mu.cwiseProduct(s.P);
    s.t += h;
    return;
  }
  if (!grad_valid_) refresh_force(s);
  if (propagation_ == Propagation::SurfaceHopping) {
    step_fssh(s, rng, h);
  } else if (cfg_.representation == Representation::Adiabatic) {
    step_mapping_adiabatic(s, h);
  } else {
    step_mapping_diabatic(s, h);
  }
  s.t += h;
  const bool finite = s.R.allFinite() && s.P.allFinite() &&
                      (propagation_ == Propagation::SurfaceHopping
                           ? s.c.allFinite()
                           : s.mapping.x.allFinite() && s.mapping.p.allFinite());
  if (!finite) {
    std::ostringstream os;
    os << "non-finite trajectory state at t=" << s.t;
    throw std::runtime_error(os.str());
  }
  if (cfg_.exit_radius > 0.0 && s.R.norm() > cfg_.exit_radius &&
      s.R.dot(mu.cwiseProduct(s.P)) > 0.0) {
    s.exited = true;
  }
}

double Integrator::energy(const TrajectoryState& s) const {
  const double kinetic = 0.5 * (model_->inverse_mass().array() * s.P.array().square()).sum();
  if (propagation_ == Propagation::SurfaceHopping) return kinetic + ad_.E(s.active);
  const auto& m = s.mapping;
  return kinetic + 0.5 * (m.x.dot(V_ * m.x) + m.p.dot(V_ * m.p)) - m.gamma * V_.trace();
}

TrajectoryRecord run_trajectory(ModelPtr model, Propagation propagation, TrajectoryState init,
                                const IntegratorConfig& cfg, Rng* rng, const TrajectorySink& sink) {
  TrajectoryRecord rec;
  TrajectoryState s = std::move(init);
  try {
    Integrator integ(std::move(model), propagation, cfg);
    const int n_steps = cfg.n_steps();
    integ.start(s);
    rec.initial_energy = integ.energy(s);
    const double scale = std::max(std::abs(rec.initial_energy), 1e-12);
    if (sink) sink(0, s, integ);
    rec.n_records = 1;
    for (int k = 1; k <= n_steps; ++k) {
      const bool was_exited = s.exited;
      integ.step(s, rng);
      if (!was_exited) {
        const double drift = std::abs(integ.energy(s) - rec.initial_energy) / scale;
        rec.max_relative_drift = std::max(rec.max_relative_drift, drift);
      }
      if (k % cfg.record_stride == 0) {
        if (sink) sink(rec.n_records, s, integ);
        ++rec.n_records;
      }
    }
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.failure = e.what();
  }
  return rec;
}

}  // namespace cpsdyn
