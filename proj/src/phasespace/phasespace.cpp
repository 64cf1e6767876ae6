// SPDX-License-Identifier: Apache-2.0
#include "cpsdyn/phasespace.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace cpsdyn {

namespace {

void require_states(int F) {
  if (F < 1) throw DomainError("state count must be >= 1, got " + std::to_string(F));
}

void require_admissible(double gamma, int F) {
  require_states(F);
  if (!(1.0 + F * gamma > 0.0)) {
    throw DomainError("gamma " + std::to_string(gamma) + " outside (-1/F, inf) for F=" +
                      std::to_string(F));
  }
}

CMat outer_half(const Vec& x, const Vec& p) {
  const CVec g = x.cast<cplx>() + cplx(0.0, 1.0) * p.cast<cplx>();
  return 0.5 * g * g.adjoint();
}

}  // namespace

double chi(double gamma, int F) { return F * gamma * gamma + 2.0 * gamma; }

double gamma_star(int F) {
  require_states(F);
  return (std::sqrt(1.0 + F) - 1.0) / F;
}

std::pair<double, double> pair_weights(double delta, int F) {
  require_states(F);
  if (!(delta > 0.0 && delta < 1.0 / F)) {
    throw DomainError("delta " + std::to_string(delta) + " outside (0, 1/F) for F=" +
                      std::to_string(F));
  }
  const double chi_plus = chi(delta, F);
  const double chi_minus = chi(-delta, F);
  const double denom = chi_plus - chi_minus;  // = 4 delta
  return {(1.0 - chi_minus) / denom, (chi_plus - 1.0) / denom};
}

double sphere_area(double gamma, int F) {
  require_admissible(gamma, F);
  return std::pow(2.0 * kPi, F) / std::tgamma(static_cast<double>(F)) *
         std::pow(1.0 + F * gamma, F - 1);
}

GammaScheme GammaScheme::single(double gamma, int F) {
  require_admissible(gamma, F);
  return GammaScheme(false, F, gamma, 1.0, 0.0);
}

GammaScheme GammaScheme::symmetric_pair(double delta, int F) {
  const auto [wp, wm] = pair_weights(delta, F);
  return GammaScheme(true, F, delta, wp, wm);
}

std::string describe(const GammaScheme& scheme) {
  char buf[160];
  if (scheme.is_pair()) {
    std::snprintf(buf, sizeof buf, "pair(delta=%.10g,w_plus=%.10g,w_minus=%.10g)", scheme.delta(),
                  scheme.w_plus(), scheme.w_minus());
  } else {
    std::snprintf(buf, sizeof buf, "single(gamma=%.10g)", scheme.gamma());
  }
  return buf;
}

GammaDraw draw_gamma(const GammaScheme& scheme, int branch_index) {
  if (!scheme.is_pair()) {
    if (branch_index != 0) {
      throw std::invalid_argument("single gamma scheme has only branch 0");
    }
    return {scheme.gamma(), 1.0};
  }
  switch (branch_index) {
    case 0:
      return {scheme.delta(), scheme.w_plus()};
    case 1:
      return {-scheme.delta(), scheme.w_minus()};
    default:
      throw std::invalid_argument("symmetric pair has branches 0 and 1, got " +
                                  std::to_string(branch_index));
  }
}

ElectronicMappingState project_to_sphere(const Vec& direction, double gamma) {
  const auto F = static_cast<int>(direction.size() / 2);
  require_admissible(gamma, F);
  const double scale = std::sqrt(2.0 * (1.0 + F * gamma)) / direction.norm();
  ElectronicMappingState s;
  s.x = direction.head(F) * scale;
  s.p = direction.tail(F) * scale;
  s.gamma = gamma;
  s.weight = 1.0;
  return s;
}

ElectronicMappingState sample_constraint_sphere(int F, double gamma, Rng& rng) {
  require_admissible(gamma, F);
  Vec direction(2 * F);
  for (auto& v : direction) v = rng.normal();
  return project_to_sphere(direction, gamma);
}

CMat kernel(const ElectronicMappingState& s) {
  CMat K = outer_half(s.x, s.p);
  K.diagonal().array() -= s.gamma;
  return K;
}

CMat inverse_kernel(const ElectronicMappingState& s) {
  const int F = s.n_states();
  const double radius = 1.0 + F * s.gamma;
  if (radius == 0.0) throw DomainError("inverse kernel is singular at 1 + F gamma = 0");
  CMat K = outer_half(s.x, s.p) * ((1.0 + F) / (radius * radius));
  K.diagonal().array() -= (1.0 - s.gamma) / radius;
  return K;
}

}  // namespace cpsdyn
