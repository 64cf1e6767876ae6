// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "cpsdyn/models.hpp"

using namespace cpsdyn;

namespace {

Mat potential_at(const DiabaticModel& m, const Vec& R) {
  Mat V;
  m.potential(R, V);
  return V;
}

Vec point(double r) { return Vec::Constant(1, r); }

// Largest gradient-vs-central-difference mismatch over random points,
// relative to the largest gradient entry at each point.
double gradient_defect(const DiabaticModel& m, double spread, Rng& rng, int points = 100) {
  const double h = 1e-4;
  double worst = 0.0;
  std::vector<Mat> dV;
  for (int k = 0; k < points; ++k) {
    Vec R(m.n_dof());
    for (int l = 0; l < m.n_dof(); ++l) R(l) = spread * (2.0 * rng.uniform() - 1.0);
    m.gradient(R, dV);
    double scale = 1e-12;
    for (const Mat& g : dV) scale = std::max(scale, g.cwiseAbs().maxCoeff());
    for (int l = 0; l < m.n_dof(); ++l) {
      Vec up = R, dn = R;
      up(l) += h;
      dn(l) -= h;
      const Mat fd = (potential_at(m, up) - potential_at(m, dn)) / (2.0 * h);
      worst = std::max(worst, (fd - dV[l]).cwiseAbs().maxCoeff() / scale);
    }
  }
  return worst;
}

double symmetry_defect(const DiabaticModel& m, double spread, Rng& rng) {
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    Vec R(m.n_dof());
    for (int l = 0; l < m.n_dof(); ++l) R(l) = spread * (2.0 * rng.uniform() - 1.0);
    const Mat V = potential_at(m, R);
    worst = std::max(worst, (V - V.transpose()).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

TEST_CASE("spin-boson discretization") {
  SpinBosonParams p;
  const auto [omega, c] = ohmic_modes(p);
  REQUIRE(omega.size() == 300);
  CHECK(omega(0) == doctest::Approx(3.3278e-3).epsilon(1e-4));
  CHECK(omega(0) == doctest::Approx(-std::log(300.0 / 301.0)).epsilon(1e-14));
  CHECK(c(0) / omega(0) == doctest::Approx(1.8226e-2).epsilon(1e-4));
  for (int j = 1; j < omega.size(); ++j) CHECK(omega(j) > omega(j - 1));

  // Discrete reorganization sum against the continuum value alpha * omega_c.
  const double reorg = (c.array().square() / omega.array().square()).sum();
  CHECK(std::abs(reorg - p.alpha * p.omega_c) < 0.02 * p.alpha * p.omega_c);

  SpinBosonParams zero = p;
  zero.alpha = 0.0;
  CHECK(ohmic_modes(zero).second.cwiseAbs().maxCoeff() == 0.0);

  p.n_modes = 0;
  CHECK_THROWS_AS(ohmic_modes(p), DomainError);
}

TEST_CASE("spin-boson potential and initial state") {
  SpinBosonParams p;
  p.n_modes = 6;
  const auto m = build_spin_boson(p);
  const auto [omega, c] = ohmic_modes(p);
  Rng rng(1);
  Vec R(6);
  for (int l = 0; l < 6; ++l) R(l) = rng.normal();
  const Mat V = potential_at(*m, R);
  const double bath = 0.5 * (omega.array().square() * R.array().square()).sum();
  const double shift = c.dot(R);
  CHECK(V(0, 0) == doctest::Approx(p.epsilon - shift + bath).epsilon(1e-13));
  CHECK(V(1, 1) == doctest::Approx(-p.epsilon + shift + bath).epsilon(1e-13));
  CHECK(V(0, 1) == doctest::Approx(p.delta));
  for (int j = 0; j < 6; ++j) {
    const double coth = 1.0 / std::tanh(p.beta * omega(j) / 2.0);
    CHECK(m->nuclear_init()[j].var_R == doctest::Approx(coth / (2.0 * omega(j))).epsilon(1e-12));
    CHECK(m->nuclear_init()[j].var_P == doctest::Approx(omega(j) / 2.0 * coth).epsilon(1e-12));
  }
}

TEST_CASE("thermal Wigner limits") {
  const double w = 50.0;
  const GaussianDof g = thermal_wigner(1.0, w * w, 5.0);
  CHECK(g.var_R == doctest::Approx(1.0 / (2.0 * w)).epsilon(1e-12));
  const GaussianDof cl = thermal_wigner(1.0, 1e-6, 5.0);
  CHECK(cl.var_P == doctest::Approx(1.0 / 5.0).epsilon(1e-6));
  const GaussianDof vac = thermal_wigner(1.0, 4.0, std::numeric_limits<double>::infinity());
  CHECK(vac.var_R == doctest::Approx(0.25));
  CHECK(vac.var_P == doctest::Approx(1.0));
}

TEST_CASE("Tully potentials") {
  const auto sac = build_tully(TullyParams::defaults(TullyVariant::SAC));
  CHECK(potential_at(*sac, point(60.0))(0, 0) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(potential_at(*sac, point(-60.0))(0, 0) == doctest::Approx(-0.01).epsilon(1e-12));
  CHECK(potential_at(*sac, point(60.0))(1, 1) == doctest::Approx(-0.01).epsilon(1e-12));
  CHECK(sac->inverse_mass()(0) == doctest::Approx(1.0 / 2000.0));
  CHECK(sac->nuclear_init()[0].var_R == doctest::Approx(0.5));
  CHECK(sac->nuclear_init()[0].var_P == doctest::Approx(0.5));
  CHECK(sac->nuclear_init()[0].mean_R == doctest::Approx(-3.8));

  const auto dac = build_tully(TullyParams::defaults(TullyVariant::DAC));
  CHECK(potential_at(*dac, point(0.0))(1, 1) == doctest::Approx(-0.05).epsilon(1e-14));
  CHECK(dac->nuclear_init()[0].mean_R == doctest::Approx(-10.0));

  const auto ecr = build_tully(TullyParams::defaults(TullyVariant::ECR));
  CHECK(potential_at(*ecr, point(0.0))(0, 1) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(potential_at(*ecr, point(-1e-9))(0, 1) == doctest::Approx(0.1).epsilon(1e-8));
  CHECK(potential_at(*ecr, point(1e-9))(0, 1) == doctest::Approx(0.1).epsilon(1e-8));
  CHECK(potential_at(*ecr, point(0.0))(0, 0) == doctest::Approx(-0.0006));
  CHECK(ecr->nuclear_init()[0].mean_R == doctest::Approx(-13.0));

  CHECK_THROWS(parse_tully_variant("XYZ"));
  CHECK(parse_tully_variant("ecr") == TullyVariant::ECR);
}

TEST_CASE("cavity model") {
  CavityParams p = CavityParams::three_level();
  p.n_modes = 10;
  const auto m = build_cavity(p);
  CHECK(m->n_states() == 3);
  CHECK(m->n_dof() == 10);
  CHECK(m->form().frequency(0) == doctest::Approx(1.8227e-3).epsilon(1e-4));
  CHECK(m->form().frequency(0) == doctest::Approx(kPi * kSpeedOfLightAu / 236200.0).epsilon(1e-12));
  for (int j = 2; j <= 10; j += 2) {
    CHECK(std::abs(cavity_coupling(j, p.length / 2.0, p.length)) < 1e-15);
    CHECK(m->form().C[j - 1].cwiseAbs().maxCoeff() < 1e-18);
  }
  CHECK(m->form().C[0](0, 2) == 0.0);
  const double w1 = m->form().frequency(0);
  CHECK(m->form().C[0](0, 1) == doctest::Approx(-1.034 * w1 * cavity_coupling(1, p.length / 2, p.length)));
  CHECK(m->nuclear_init()[0].var_R == doctest::Approx(1.0 / (2.0 * w1)));

  const auto two = build_cavity(CavityParams::two_level());
  CHECK(two->n_states() == 2);
  const Mat V0 = potential_at(*two, Vec::Zero(two->n_dof()));
  CHECK(V0(0, 0) == doctest::Approx(-0.6738));
  CHECK(V0(1, 1) == doctest::Approx(-0.2798));
}

TEST_CASE("pyrazine LVCM") {
  const LvcmParams p = LvcmParams::pyrazine();
  const auto m = build_lvcm(p);
  CHECK(m->n_states() == 2);
  CHECK(m->n_dof() == 3);
  CHECK(m->initial_state() == 1);
  const Mat V0 = potential_at(*m, Vec::Zero(3));
  CHECK((V0(1, 1) - V0(0, 0)) / kEvToHartree == doctest::Approx(0.90).epsilon(1e-12));
  for (int k = 0; k < 3; ++k) {
    CHECK(m->inverse_mass()(k) == doctest::Approx(p.omega[k] * kEvToHartree));
    CHECK(m->nuclear_init()[k].var_R == doctest::Approx(0.5));
    CHECK(m->nuclear_init()[k].var_P == doctest::Approx(0.5));
  }

  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Vec R(3);
    for (int k = 0; k < 3; ++k) R(k) = 2.0 * rng.normal();
    const Mat V = potential_at(*m, R);
    double harmonic = 0.0;
    for (int k = 0; k < 3; ++k) harmonic += 0.5 * p.omega[k] * R(k) * R(k);
    for (int n = 0; n < 2; ++n) {
      double lin = 0.0;
      for (int k = 0; k < 3; ++k) lin += p.kappa[n][k] * R(k);
      CHECK(V(n, n) == doctest::Approx((harmonic + p.vertical[n] + lin) * kEvToHartree).epsilon(1e-12));
    }
    CHECK(V(0, 1) == doctest::Approx(0.262 * R(2) * kEvToHartree).epsilon(1e-12));
    Vec R12 = R;
    R12(0) += 1.0;
    R12(1) -= 2.0;
    CHECK(potential_at(*m, R12)(0, 1) == doctest::Approx(V(0, 1)).epsilon(1e-14));
  }
}

TEST_CASE("analytic gradients match finite differences") {
  Rng rng(2);
  for (TullyVariant v : {TullyVariant::SAC, TullyVariant::DAC, TullyVariant::ECR}) {
    const auto m = build_tully(TullyParams::defaults(v));
    CHECK(gradient_defect(*m, 10.0, rng) < 1e-5);
    CHECK(symmetry_defect(*m, 10.0, rng) < 1e-14);
  }
  SpinBosonParams sb;
  sb.n_modes = 12;
  CHECK(gradient_defect(*build_spin_boson(sb), 3.0, rng) < 1e-5);
  CavityParams cp = CavityParams::three_level();
  cp.n_modes = 12;
  CHECK(gradient_defect(*build_cavity(cp), 50.0, rng) < 1e-5);
  CHECK(gradient_defect(*build_lvcm(LvcmParams::pyrazine()), 3.0, rng) < 1e-5);
  CHECK(symmetry_defect(*build_lvcm(LvcmParams::pyrazine()), 3.0, rng) < 1e-14);
}

TEST_CASE("contract_gradient matches the generic contraction") {
  SpinBosonParams sb;
  sb.n_modes = 5;
  const auto m = build_spin_boson(sb);
  Rng rng(8);
  Vec R(5);
  for (int l = 0; l < 5; ++l) R(l) = rng.normal();
  Mat rho(2, 2);
  rho << 0.7, 0.2, 0.2, 0.3;
  Vec fast;
  m->contract_gradient(R, rho, fast);
  std::vector<Mat> dV;
  m->gradient(R, dV);
  for (int l = 0; l < 5; ++l) CHECK(fast(l) == doctest::Approx(dV[l].cwiseProduct(rho).sum()).epsilon(1e-12));
}

TEST_CASE("frozen wrapper") {
  const auto base = build_tully(TullyParams::defaults(TullyVariant::SAC));
  const FrozenModel frozen(base, point(0.5));
  CHECK((potential_at(frozen, point(-7.0)) - potential_at(*base, point(0.5))).norm() == 0.0);
  std::vector<Mat> dV;
  frozen.gradient(point(3.0), dV);
  CHECK(dV[0].norm() == 0.0);
}

TEST_CASE("adiabatize") {
  Mat V(2, 2);
  V << 0.0, 0.3, 0.3, 0.0;
  std::vector<Mat> zero{Mat::Zero(2, 2)};
  AdiabaticData ad = adiabatize(V, zero);
  CHECK(ad.E(0) == doctest::Approx(-0.3));
  CHECK(ad.E(1) == doctest::Approx(0.3));
  CHECK(ad.d[0].norm() == 0.0);

  const auto sac = build_tully(TullyParams::defaults(TullyVariant::SAC));
  std::vector<Mat> dV;
  sac->gradient(point(0.0), dV);
  ad = adiabatize(potential_at(*sac, point(0.0)), dV);
  CHECK(ad.E(0) == doctest::Approx(-0.005).epsilon(1e-12));
  CHECK(ad.E(1) == doctest::Approx(0.005).epsilon(1e-12));

  CHECK_THROWS_AS(adiabatize(Mat::Identity(2, 2), zero), DegeneracyError);
}

TEST_CASE("adiabatize matches closed-form 2x2 data on Tully grids") {
  for (TullyVariant v : {TullyVariant::SAC, TullyVariant::DAC, TullyVariant::ECR}) {
    const auto m = build_tully(TullyParams::defaults(v));
    std::vector<Mat> dV;
    Mat prevU;
    for (int i = 0; i <= 600; ++i) {
      const double R = -15.0 + 0.05 * i;
      const Mat V = potential_at(*m, point(R));
      m->gradient(point(R), dV);
      const AdiabaticData ad = adiabatize(V, dV, i > 0 ? &prevU : nullptr);
      prevU = ad.U;
      const double mean = 0.5 * (V(0, 0) + V(1, 1)), half = 0.5 * (V(0, 0) - V(1, 1));
      const double root = std::hypot(half, V(0, 1));
      CHECK(ad.E(0) == doctest::Approx(mean - root).epsilon(1e-10));
      CHECK(ad.E(1) == doctest::Approx(mean + root).epsilon(1e-10));
      const Mat D = ad.U.transpose() * V * ad.U;
      CHECK(std::abs(D(0, 1)) < 1e-10);
      CHECK((ad.U.transpose() * ad.U - Mat::Identity(2, 2)).norm() < 1e-12);
      // |d12| = |V12' (V11 - V22) - V12 (V11' - V22')| / ((V11 - V22)^2 + 4 V12^2)
      const double delta = V(0, 0) - V(1, 1), ddelta = dV[0](0, 0) - dV[0](1, 1);
      const double d12 = (dV[0](0, 1) * delta - V(0, 1) * ddelta) / (delta * delta + 4.0 * V(0, 1) * V(0, 1));
      CHECK(std::abs(std::abs(ad.d[0](0, 1)) - std::abs(d12)) < 1e-10 * std::max(1.0, std::abs(d12)));
      CHECK(ad.d[0](0, 1) == -ad.d[0](1, 0));
      CHECK(ad.d[0](0, 0) == 0.0);
    }
  }
}

TEST_CASE("nuclear sampling moments") {
  TullyParams tp = TullyParams::defaults(TullyVariant::SAC);
  tp.P0 = 20.0;
  const auto m = build_tully(tp);
  Rng rng(12);
  double sr = 0, sp = 0, sr2 = 0, sp2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const auto [R, P] = sample_nuclear_initial(*m, rng);
    sr += R(0);
    sp += P(0);
    sr2 += R(0) * R(0);
    sp2 += P(0) * P(0);
  }
  const double mr = sr / n, mp = sp / n;
  CHECK(std::abs(mr + 3.8) < 0.01);
  CHECK(std::abs(mp - 20.0) < 0.01);
  CHECK(std::abs(sr2 / n - mr * mr - 0.5) < 0.01);
  CHECK(std::abs(sp2 / n - mp * mp - 0.5) < 0.01);
}
