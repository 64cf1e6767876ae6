// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "cpsdyn/ensemble.hpp"

using namespace cpsdyn;

namespace {

ElectronicMappingState pole(int F, double gamma, int n) {
  ElectronicMappingState s;
  s.x = Vec::Zero(F);
  s.p = Vec::Zero(F);
  s.x(n) = std::sqrt(2.0 * (1.0 + F * gamma));
  s.gamma = gamma;
  return s;
}

EnsembleConfig frozen_config(Method method, long n) {
  EnsembleConfig cfg;
  cfg.method = method;
  cfg.scheme = method == Method::WMM ? GammaScheme::symmetric_pair(0.1, 2) : GammaScheme::single(gamma_star(2), 2);
  cfg.n_trajectories = n;
  cfg.seed = 17;
  cfg.observables = {ObservableSpec::population(0), ObservableSpec::population(1)};
  cfg.integrator.dt = 0.5;
  cfg.integrator.max_time = 100.0;
  cfg.integrator.record_stride = 10;
  return cfg;
}

}  // namespace

TEST_CASE("initial electronic weight") {
  for (double g : {0.0, gamma_star(2), 0.3}) {
    CHECK(initial_electronic_weight(pole(2, g, 0), 0) == doctest::Approx(2.0 * (1.0 + g)).epsilon(1e-14));
  }
  Rng rng(1);
  for (const GammaScheme& scheme : {GammaScheme::single(gamma_star(2), 2), GammaScheme::symmetric_pair(0.1, 2)}) {
    double sum = 0, sumsq = 0;
    const long n = 1000000;
    for (long i = 0; i < n / scheme.n_branches(); ++i) {
      Vec dir(4);
      for (auto& v : dir) v = rng.normal();
      double value = 0.0;
      for (int b = 0; b < scheme.n_branches(); ++b) {
        const GammaDraw d = draw_gamma(scheme, b);
        ElectronicMappingState s = project_to_sphere(dir, d.gamma);
        value += d.weight * initial_electronic_weight(s, 0);
      }
      sum += value;
      sumsq += value * value;
    }
    const double m = sum / (n / scheme.n_branches());
    const double se = std::sqrt((sumsq / (n / scheme.n_branches()) - m * m) / (n / scheme.n_branches()));
    CHECK(std::abs(m - 1.0) < 3 * se);
  }
}

TEST_CASE("population estimate") {
  Rng rng(2);
  for (int F : {2, 3}) {
    for (int i = 0; i < 50; ++i) {
      auto s = sample_constraint_sphere(F, 0.3, rng);
      s.gamma = 0.3;
      double total = 0.0;
      for (int n = 0; n < F; ++n) total += population_estimate(s, n);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
    }
  }
  const auto s = pole(3, 0.0, 1);
  CHECK(population_estimate(s, 1) == doctest::Approx(1.0));
  CHECK(population_estimate(s, 0) == 0.0);
  CHECK(population_estimate(s, 2) == 0.0);
  CHECK(population_estimate(pole(2, 0.5, 1), 0) == -0.5);
}

TEST_CASE("adiabatic population estimate uses U") {
  ElectronicMappingState s = pole(2, 0.0, 0);
  Mat U(2, 2);
  const double c = std::cos(0.3), sn = std::sin(0.3);
  U << c, -sn, sn, c;
  CHECK(adiabatic_population_estimate(s, U, 0) == doctest::Approx(c * c));
  CHECK(adiabatic_population_estimate(s, U, 1) == doctest::Approx(sn * sn));
}

TEST_CASE("accumulator") {
  SeriesAccumulator acc(2, 3);
  Mat sample(2, 3);
  sample << 1, 2, 3, 4, 5, 6;
  for (int i = 0; i < 10; ++i) acc.add(sample);
  Mat mean, se;
  acc.finish(mean, se);
  CHECK((mean - sample).norm() == 0.0);
  CHECK(se.norm() == 0.0);
  SeriesAccumulator empty(2, 3);
  CHECK_THROWS(empty.finish(mean, se));

  // Merging partial accumulators equals one pass.
  SeriesAccumulator whole(1, 1), a(1, 1), b(1, 1);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    Mat x = Mat::Constant(1, 1, rng.normal());
    whole.add(x);
    (i < 37 ? a : b).add(x);
  }
  a.merge(b);
  Mat m1, s1, m2, s2;
  whole.finish(m1, s1);
  a.finish(m2, s2);
  CHECK(m1(0, 0) == doctest::Approx(m2(0, 0)).epsilon(1e-13));
  CHECK(s1(0, 0) == doctest::Approx(s2(0, 0)).epsilon(1e-12));
}

TEST_CASE("observable validation and names") {
  CHECK_THROWS(ObservableSpec::population(2).validate(2));
  CHECK_NOTHROW(ObservableSpec::population(1).validate(2));
  CHECK(ObservableSpec::difference(0, 1).column_names(2) == std::vector<std::string>{"D12"});
  CHECK(ObservableSpec::channels(Representation::Adiabatic).column_names(2) ==
        std::vector<std::string>{"T1_adia", "T2_adia", "R1_adia", "R2_adia"});
  CHECK(total_columns({ObservableSpec::channels(Representation::Diabatic)}, 2) == 5);
}

TEST_CASE("frozen nuclei ensembles reproduce cos^2 and agree with each other") {
  const double delta = 0.1;
  const auto model = build_two_level(0.0, delta);
  const EnsembleSeries cmm = run_ensemble(model, frozen_config(Method::CMM, 10000));
  const EnsembleSeries wmm = run_ensemble(model, frozen_config(Method::WMM, 10000));
  for (const EnsembleSeries* s : {&cmm, &wmm}) {
    CHECK(s->n_trajectories == 10000);
    for (Eigen::Index j = 0; j < s->times.size(); ++j) {
      const double exact = std::pow(std::cos(delta * s->times(j)), 2);
      CHECK(std::abs(s->values(0, j) - exact) < 3 * std::max(s->errors(0, j), 1e-12));
      const int total = s->column("total");
      CHECK(std::abs(s->values(total, j) - 1.0) < 3 * std::max(s->errors(total, j), 1e-12));
      CHECK(s->values(0, j) + s->values(1, j) == doctest::Approx(s->values(total, j)).epsilon(1e-10));
    }
  }
  for (Eigen::Index j = 0; j < cmm.times.size(); ++j) {
    const double comb = std::hypot(cmm.errors(0, j), wmm.errors(0, j));
    CHECK(std::abs(cmm.values(0, j) - wmm.values(0, j)) < 3 * std::max(comb, 1e-12));
  }
}

TEST_CASE("standard error scales as 1/sqrt(N) for wMM") {
  const auto model = build_two_level(0.0, 0.1);
  const EnsembleSeries small = run_ensemble(model, frozen_config(Method::WMM, 4000));
  const EnsembleSeries large = run_ensemble(model, frozen_config(Method::WMM, 16000));
  const Eigen::Index j = small.times.size() / 2;
  const double ratio = small.errors(0, j) / large.errors(0, j);
  CHECK(ratio > 1.8);
  CHECK(ratio < 2.2);
  CHECK(std::isfinite(large.values(0, j)));
}

TEST_CASE("spin-boson D(0) = 1") {
  SpinBosonParams p;
  p.n_modes = 10;
  for (Method m : {Method::CMM, Method::WMM}) {
    EnsembleConfig cfg = frozen_config(m, 4000);
    cfg.observables = {ObservableSpec::difference(0, 1)};
    cfg.integrator.dt = 0.01;
    cfg.integrator.max_time = 0.0;
    const EnsembleSeries s = run_ensemble(build_spin_boson(p), cfg);
    CHECK(std::abs(s.values(0, 0) - 1.0) < 3 * s.errors(0, 0));
  }
}

TEST_CASE("trace identity along spin-boson dynamics") {
  SpinBosonParams p;
  p.n_modes = 20;
  for (Method m : {Method::CMM, Method::WMM}) {
    EnsembleConfig cfg = frozen_config(m, 2000);
    cfg.integrator.dt = 0.01;
    cfg.integrator.max_time = 5.0;
    cfg.integrator.record_stride = 50;
    const EnsembleSeries s = run_ensemble(build_spin_boson(p), cfg);
    const int total = s.column("total");
    for (Eigen::Index j = 0; j < s.times.size(); ++j) {
      CHECK(std::abs(s.values(total, j) - 1.0) < 3 * s.errors(total, j));
      CHECK(std::abs(s.values(0, j) + s.values(1, j) - s.values(total, j)) < 1e-10);
    }
  }
}

TEST_CASE("scattering channels sum to the total") {
  TullyParams p = TullyParams::defaults(TullyVariant::SAC);
  p.P0 = 30.0;
  EnsembleConfig cfg;
  cfg.method = Method::CMM;
  cfg.scheme = GammaScheme::single(gamma_star(2), 2);
  cfg.n_trajectories = 1000;
  cfg.observables = {ObservableSpec::channels(Representation::Diabatic),
                     ObservableSpec::channels(Representation::Adiabatic)};
  cfg.integrator.dt = 1.0;
  cfg.integrator.exit_radius = 8.0;
  cfg.integrator.max_time = 2400.0;
  cfg.integrator.record_stride = 2400;
  const EnsembleSeries s = run_ensemble(build_tully(p), cfg);
  for (const char* suffix : {"", "_adia"}) {
    double sum = 0.0;
    for (const char* c : {"T1", "T2", "R1", "R2"}) sum += s.final_value(std::string(c) + suffix);
    CHECK(sum == doctest::Approx(s.final_value("total")).epsilon(1e-10));
    CHECK(std::abs(sum - 1.0) < 3 * s.final_error("total"));
  }
}

TEST_CASE("ECR asymptotic adiabatic basis") {
  const auto m = build_tully(TullyParams::defaults(TullyVariant::ECR));
  auto U_at = [&](double R) {
    Mat V;
    std::vector<Mat> dV;
    m->potential(Vec::Constant(1, R), V);
    m->gradient(Vec::Constant(1, R), dV);
    return adiabatize(V, dV).U;
  };
  // Reflected side: coupling vanishes and U is the identity up to signs.
  CHECK((U_at(-30.0).cwiseAbs() - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-6);
  // Transmitted side: coupling plateau, U independent of R.
  CHECK((U_at(20.0).cwiseAbs() - U_at(30.0).cwiseAbs()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("determinism across worker counts") {
  const auto model = build_tully(TullyParams::defaults(TullyVariant::SAC));
  for (Method m : {Method::CMM, Method::WMM, Method::FSSH}) {
    EnsembleConfig cfg;
    cfg.method = m;
    cfg.scheme = m == Method::WMM ? GammaScheme::symmetric_pair(0.1, 2) : GammaScheme::single(gamma_star(2), 2);
    cfg.n_trajectories = 600;
    cfg.chunk_size = 64;
    cfg.observables = {ObservableSpec::channels(Representation::Diabatic)};
    cfg.integrator.dt = 2.0;
    cfg.integrator.max_time = 400.0;
    cfg.integrator.record_stride = 50;
    cfg.integrator.representation = m == Method::FSSH ? Representation::Adiabatic : Representation::Diabatic;
    std::string first;
    for (int workers : {1, 3, 4}) {
      cfg.workers = workers;
      std::ostringstream os;
      run_ensemble(model, cfg).write_csv(os);
      if (first.empty()) first = os.str();
      CHECK(os.str() == first);
    }
  }
}

TEST_CASE("CSV round trip and normalization") {
  EnsembleSeries s;
  s.times = Vec::LinSpaced(4, 0.0, 3.0);
  s.names = {"P1", "P2", "total"};
  s.values.resize(3, 4);
  s.values << 1.0, 0.5, 0.25, 0.125, 0.0, 0.5, 0.7, 0.9, 1.0, 1.0, 0.95, 1.025;
  s.errors = Mat::Constant(3, 4, 0.01);
  s.n_trajectories = 12;
  s.n_failed = 1;
  s.metadata = {{"method", "cmm"}, {"seed", "5"}};
  const auto path = (std::filesystem::temp_directory_path() / "cpsdyn_roundtrip.csv").string();
  s.write_csv(path);
  const EnsembleSeries r = EnsembleSeries::read_csv(path);
  std::filesystem::remove(path);
  CHECK(r.names == s.names);
  CHECK(r.n_trajectories == 12);
  CHECK(r.n_failed == 1);
  CHECK(r.metadata == s.metadata);
  CHECK((r.times - s.times).norm() < 1e-12);
  CHECK((r.values - s.values).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((r.errors - s.errors).cwiseAbs().maxCoeff() < 1e-7);
  CHECK(r.final_value("P2") == doctest::Approx(0.9));
  CHECK_THROWS_AS(r.column("nope"), std::out_of_range);

  EnsembleSeries n = s;
  normalize_by_total(n);
  CHECK(n.values(0, 2) == doctest::Approx(0.25 / 0.95));
  CHECK(n.values(1, 3) == doctest::Approx(0.9 / 1.025));
  CHECK(n.errors(1, 3) == doctest::Approx(0.01 / 1.025));
}
