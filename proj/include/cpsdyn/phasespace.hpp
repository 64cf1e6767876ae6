// SPDX-License-Identifier: Apache-2.0
//
// Mapping kernels and sampling on (weighted) constraint coordinate-momentum
// phase space for an F-state discrete system. A phase point (x, p) lives on
// the sphere  sum_n (x_n^2 + p_n^2) / 2 = 1 + F*gamma.
#pragma once

#include <string>
#include <utility>

#include "cpsdyn/common.hpp"
#include "cpsdyn/rng.hpp"

namespace cpsdyn {

/// chi(gamma) = F gamma^2 + 2 gamma.
double chi(double gamma, int F);

/// Self-inverse kernel parameter (sqrt(1+F) - 1) / F.
double gamma_star(int F);

/// Branch weights (w_plus, w_minus) of the symmetric pair gamma = +/-delta.
/// Requires 0 < delta < 1/F.
std::pair<double, double> pair_weights(double delta, int F);

/// Area of the constraint surface, (2 pi)^F / Gamma(F) * (1 + F gamma)^(F-1).
double sphere_area(double gamma, int F);

/// The gamma policy of a run: one value, or the signed two-point pair
/// {+delta: w_plus, -delta: w_minus}.
class GammaScheme {
 public:
  static GammaScheme single(double gamma, int F);
  static GammaScheme symmetric_pair(double delta, int F);

  bool is_pair() const noexcept { return pair_; }
  int n_states() const noexcept { return F_; }
  int n_branches() const noexcept { return pair_ ? 2 : 1; }
  /// Single value; for a pair this is +delta.
  double gamma() const noexcept { return value_; }
  double delta() const noexcept { return value_; }
  double w_plus() const noexcept { return w_plus_; }
  double w_minus() const noexcept { return w_minus_; }

 private:
  GammaScheme(bool pair, int F, double value, double wp, double wm)
      : pair_(pair), F_(F), value_(value), w_plus_(wp), w_minus_(wm) {}
  bool pair_;
  int F_;
  double value_;
  double w_plus_;
  double w_minus_;
};

/// "single(gamma=...)" or "pair(delta=...,w_plus=...,w_minus=...)".
std::string describe(const GammaScheme& scheme);

struct GammaDraw {
  double gamma;
  double weight;
};

/// Branch 0 -> (+delta, w_plus), branch 1 -> (-delta, w_minus); a single
/// scheme only accepts branch 0 and returns weight 1.
GammaDraw draw_gamma(const GammaScheme& scheme, int branch_index);

struct ElectronicMappingState {
  Vec x;
  Vec p;
  double gamma = 0.0;
  double weight = 1.0;

  int n_states() const noexcept { return static_cast<int>(x.size()); }
  /// sum_n (x_n^2 + p_n^2) / 2
  double action() const { return 0.5 * (x.squaredNorm() + p.squaredNorm()); }
};

/// Uniform point on the constraint surface: 2F standard normals rescaled to
/// squared norm 2 (1 + F gamma).
ElectronicMappingState sample_constraint_sphere(int F, double gamma, Rng& rng);

/// Same as above but with the Gaussian direction supplied by the caller
/// (length 2F, x block first). Used to share one direction across gamma
/// branches.
ElectronicMappingState project_to_sphere(const Vec& direction, double gamma);

/// K_nm = (x_n + i p_n)(x_m - i p_m) / 2 - gamma delta_nm
CMat kernel(const ElectronicMappingState& s);

/// Inverse kernel with coefficients (1+F)/(2(1+F gamma)^2) and
/// (1-gamma)/(1+F gamma).
CMat inverse_kernel(const ElectronicMappingState& s);

}  // namespace cpsdyn
