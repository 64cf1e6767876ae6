// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cpsdyn/app.hpp"

namespace cpsdyn {

namespace {

SelftestCheck check(std::string name, double measured, double tolerance) {
  return {std::move(name), measured, tolerance, std::isfinite(measured) && measured <= tolerance};
}

ElectronicMappingState sample_at(int F, double gamma, Rng& rng) {
  ElectronicMappingState s = sample_constraint_sphere(F, gamma, rng);
  s.gamma = gamma;
  return s;
}

// Largest |K - K^-1| entry over random sphere points.
double self_inverse_defect(int F, double gamma, Rng& rng) {
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const ElectronicMappingState s = sample_at(F, gamma, rng);
    worst = std::max(worst, (kernel(s) - inverse_kernel(s)).cwiseAbs().maxCoeff());
  }
  return worst;
}

// Largest z-score of the second and fourth sphere moments against their
// closed forms.
double moment_z(int F, double gamma, long n, Rng& rng) {
  const int L = 2 * F;
  const double xi = 1.0 + F * gamma;
  Mat m2 = Mat::Zero(L, L), s2 = Mat::Zero(L, L);
  // Fourth moments on the index patterns iiii and iijj.
  double m4a = 0, s4a = 0, m4b = 0, s4b = 0;
  Vec X(L);
  for (long k = 0; k < n; ++k) {
    const ElectronicMappingState s = sample_constraint_sphere(F, gamma, rng);
    X << s.x, s.p;
    const Mat outer = X * X.transpose();
    m2 += outer;
    s2 += outer.cwiseProduct(outer);
    const double a = std::pow(X(0), 4), b = X(0) * X(0) * X(1) * X(1);
    m4a += a;
    s4a += a * a;
    m4b += b;
    s4b += b * b;
  }
  const double dn = static_cast<double>(n);
  auto z = [dn](double sum, double sumsq, double expect) {
    const double mean = sum / dn;
    const double se = std::sqrt(std::max(sumsq / dn - mean * mean, 1e-300) / dn);
    return std::abs(mean - expect) / se;
  };
  double worst = 0.0;
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < L; ++j) worst = std::max(worst, z(m2(i, j), s2(i, j), i == j ? xi / F : 0.0));
  }
  const double c4 = xi * xi / (F * (F + 1.0));
  worst = std::max(worst, z(m4a, s4a, 3.0 * c4));
  worst = std::max(worst, z(m4b, s4b, c4));
  return worst;
}

// Largest z-score of F E_w[K_nm K_lk] - delta_nk delta_ml over all index
// combinations, with the kernel evaluated at the scheme's gammas.
double duality_z(const std::vector<std::pair<double, double>>& branches, int F, long n, Rng& rng) {
  const int F4 = F * F * F * F;
  Vec sum = Vec::Zero(F4), sumsq = Vec::Zero(F4);
  Vec value(F4);
  const long per = n / static_cast<long>(branches.size());
  for (long k = 0; k < per; ++k) {
    const Vec dir = [&] {
      Vec d(2 * F);
      for (int i = 0; i < 2 * F; ++i) d(i) = rng.normal();
      return d;
    }();
    value.setZero();
    for (const auto& [gamma, w] : branches) {
      ElectronicMappingState s = project_to_sphere(dir, gamma);
      s.gamma = gamma;
      const CMat K = kernel(s);
      int idx = 0;
      for (int a = 0; a < F; ++a)
        for (int b = 0; b < F; ++b)
          for (int c = 0; c < F; ++c)
            for (int d = 0; d < F; ++d) value(idx++) += w * F * (K(a, b) * K(c, d)).real();
    }
    sum += value;
    sumsq += value.cwiseProduct(value);
  }
  const double dn = static_cast<double>(per);
  double worst = 0.0;
  int idx = 0;
  for (int a = 0; a < F; ++a)
    for (int b = 0; b < F; ++b)
      for (int c = 0; c < F; ++c)
        for (int d = 0; d < F; ++d, ++idx) {
          const double expect = (a == d && b == c) ? 1.0 : 0.0;
          const double mean = sum(idx) / dn;
          const double se = std::sqrt(std::max(sumsq(idx) / dn - mean * mean, 1e-300) / dn);
          worst = std::max(worst, std::abs(mean - expect) / std::max(se, 1e-12));
        }
  return worst;
}

double tully_drift(TullyVariant v, double P0, double dt) {
  TullyParams p = TullyParams::defaults(v);
  p.P0 = P0;
  EnsembleConfig cfg;
  cfg.method = Method::CMM;
  cfg.scheme = GammaScheme::single(gamma_star(2), 2);
  cfg.n_trajectories = 16;
  cfg.observables = {ObservableSpec::population(0)};
  cfg.integrator.dt = dt;
  cfg.integrator.max_time = 2.0 * 2000.0 * 6.0 / P0;
  cfg.integrator.record_stride = 100;
  EnsembleDiagnostics d;
  run_ensemble(build_tully(p), cfg, &d);
  return d.max_energy_drift;
}

double frozen_population_z(Method method, std::uint64_t seed) {
  const double delta = 0.1;
  EnsembleConfig cfg;
  cfg.method = method;
  cfg.scheme = method == Method::WMM ? GammaScheme::symmetric_pair(0.1, 2) : GammaScheme::single(gamma_star(2), 2);
  cfg.n_trajectories = 4000;
  cfg.seed = seed;
  cfg.observables = {ObservableSpec::population(0)};
  cfg.integrator.dt = 0.5;
  cfg.integrator.max_time = 10.0 / delta;
  cfg.integrator.record_stride = 4;
  const EnsembleSeries s = run_ensemble(build_two_level(0.0, delta), cfg);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < s.times.size(); ++j) {
    const double c = std::cos(delta * s.times(j));
    const double se = std::max(s.errors(0, j), 1e-3);
    worst = std::max(worst, std::abs(s.values(0, j) - c * c) / se);
  }
  return worst;
}

// Integral of the (1,1) closed-form marginal over the plane.
double marginal_norm_defect(double gamma) {
  const int n = 600;
  const double r = std::sqrt(2.0 * (1.0 + 2.0 * gamma));
  const double h = 2.0 * r / n;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      total += marginal_f2_analytic(-r + (i + 0.5) * h, -r + (j + 0.5) * h, gamma)(0, 0).real();
    }
  }
  return std::abs(total * h * h - 1.0);
}

// Mean |K_11| of the weighted marginal inside the inner disc over its mean in
// the annulus between the two discs.
double hollow_ratio(double delta) {
  const double r_in = std::sqrt(2.0 * (1.0 - 2.0 * delta));
  const double r_out = std::sqrt(2.0 * (1.0 + 2.0 * delta));
  const int n = 400;
  double inner = 0, ring = 0;
  long n_inner = 0, n_ring = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double a = -r_out + (i + 0.5) * 2.0 * r_out / n;
      const double b = -r_out + (j + 0.5) * 2.0 * r_out / n;
      const double rr = std::hypot(a, b);
      const double v = std::abs(marginal_f2_weighted(a, b, delta)(0, 0));
      if (rr < r_in) {
        inner += v;
        ++n_inner;
      } else if (rr < r_out) {
        ring += v;
        ++n_ring;
      }
    }
  }
  return (inner / n_inner) / (ring / n_ring);
}

}  // namespace

std::vector<SelftestCheck> run_selftest(const SelftestOptions& options) {
  std::vector<SelftestCheck> out;
  Rng rng = Rng::stream(options.seed, 0);
  auto g_star = [&](int F) { return options.gamma_override.value_or(gamma_star(F)); };

  out.push_back(check("gamma_star(2) = 0.366", std::abs(gamma_star(2) - 0.366), 5e-4));
  for (int F : {2, 3, 5}) {
    out.push_back(check("self-inverse kernel F=" + std::to_string(F), self_inverse_defect(F, g_star(F), rng), 1e-12));
  }
  out.push_back(check("sphere moments F=3 gamma=0.3 (z)", moment_z(3, 0.3, 200000, rng), 5.0));
  out.push_back(check("sphere moments F=2 gamma=0 (z)", moment_z(2, 0.0, 200000, rng), 5.0));
  out.push_back(check("duality single gamma_star F=2 (z)", duality_z({{g_star(2), 1.0}}, 2, 200000, rng), 5.0));
  {
    const auto [wp, wm] = pair_weights(0.1, 2);
    out.push_back(check("duality pair delta=0.1 F=2 (z)", duality_z({{0.1, wp}, {-0.1, wm}}, 2, 400000, rng), 5.0));
    out.push_back(check("pair weights (2.95, -1.95)", std::max(std::abs(wp - 2.95), std::abs(wm + 1.95)), 1e-12));
    out.push_back(check("pair weights normalization", std::abs(wp * chi(0.1, 2) + wm * chi(-0.1, 2) - 1.0) +
                                                          std::abs(wp + wm - 1.0),
                        1e-12));
  }
  out.push_back(check("energy drift SAC dt=1", tully_drift(TullyVariant::SAC, 20.0, 1.0), 1e-5));
  out.push_back(check("energy drift ECR dt=0.5", tully_drift(TullyVariant::ECR, 20.0, 0.5), 1e-5));
  out.push_back(check("frozen nuclei CMM P1 (z)", frozen_population_z(Method::CMM, options.seed), 5.0));
  out.push_back(check("frozen nuclei wMM P1 (z)", frozen_population_z(Method::WMM, options.seed), 5.0));
  out.push_back(check("marginal normalization gamma_star", marginal_norm_defect(gamma_star(2)), 5e-3));
  out.push_back(check("marginal hollow ring ratio delta=0.05", hollow_ratio(0.05), 0.2));
  return out;
}

std::string format_selftest(const std::vector<SelftestCheck>& checks) {
  std::ostringstream os;
  char buf[256];
  int failed = 0;
  for (const auto& c : checks) {
    std::snprintf(buf, sizeof buf, "%s  %-40s measured %.3e  tolerance %.3e\n", c.passed ? "PASS" : "FAIL",
                  c.name.c_str(), c.measured, c.tolerance);
    os << buf;
    failed += c.passed ? 0 : 1;
  }
  os << (failed == 0 ? "all " + std::to_string(checks.size()) + " checks passed\n"
                     : std::to_string(failed) + " of " + std::to_string(checks.size()) + " checks failed\n");
  return os.str();
}

}  // namespace cpsdyn
