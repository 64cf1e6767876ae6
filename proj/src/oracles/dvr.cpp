// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <complex>
#include <cstdio>
#include <memory>
#include <mutex>
#include <string>

#include <fftw3.h>

#include "cpsdyn/linalg.hpp"
#include "cpsdyn/oracles.hpp"

namespace cpsdyn {

Vec frozen_nuclei_exact(const Mat& V, const CVec& psi0, double t) {
  if (psi0.size() != V.rows()) throw DomainError("psi0 length does not match V");
  const CVec psi = real_symmetric_propagator(V, t) * psi0;
  return psi.cwiseAbs2();
}

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class FftPair {
 public:
  explicit FftPair(int n) : n_(n) {
    data_ = fftw_alloc_complex(static_cast<std::size_t>(n));
    std::lock_guard<std::mutex> lock(planner_mutex());
    forward_ = fftw_plan_dft_1d(n, data_, data_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(n, data_, data_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftPair() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(data_);
  }
  FftPair(const FftPair&) = delete;
  FftPair& operator=(const FftPair&) = delete;

  cplx* data() { return reinterpret_cast<cplx*>(data_); }
  void forward() { fftw_execute(forward_); }
  // Unnormalized; callers fold 1/n into the kinetic factor.
  void backward() { fftw_execute(backward_); }

 private:
  int n_;
  fftw_complex* data_;
  fftw_plan forward_;
  fftw_plan backward_;
};

}  // namespace

GridSpec default_grid(TullyVariant v, double P0) {
  GridSpec g;
  switch (v) {
    case TullyVariant::SAC:
      g.R_min = -60.0;
      g.R_max = 60.0;
      g.n_points = 4096;
      break;
    case TullyVariant::DAC:
      g.R_min = -90.0;
      g.R_max = 90.0;
      g.n_points = 4096;
      break;
    case TullyVariant::ECR:
      g.R_min = -250.0;
      g.R_max = 250.0;
      g.n_points = 16384;
      break;
  }
  // Keep the momentum grid comfortably above the fastest channel.
  while (kPi * g.n_points / (g.R_max - g.R_min) < 2.0 * std::abs(P0) + 40.0) g.n_points *= 2;
  g.dt = 1.0;
  return g;
}

double default_interaction_radius(TullyVariant v) {
  switch (v) {
    case TullyVariant::SAC:
      return 4.0;
    case TullyVariant::DAC:
      return 10.0;
    case TullyVariant::ECR:
      return 10.0;
  }
  return 10.0;
}

DvrResult split_operator_dvr(const DiabaticModel& model, const Wavepacket& packet,
                             const GridSpec& grid, const DvrOptions& opt) {
  if (model.n_dof() != 1) throw DomainError("split-operator oracle needs one nuclear coordinate");
  const int F = model.n_states();
  const int N = grid.n_points;
  if (N < 16 || (N & (N - 1)) != 0) throw DomainError("grid n_points must be a power of two >= 16");
  if (!(grid.R_max > grid.R_min) || !(grid.dt > 0.0)) throw DomainError("invalid grid");
  if (packet.init_state < 0 || packet.init_state >= F) throw DomainError("invalid initial state");
  const double mu = model.inverse_mass()(0);
  const double dx = (grid.R_max - grid.R_min) / N;
  const double dt = grid.dt;

  Vec R(N);
  for (int i = 0; i < N; ++i) R(i) = grid.R_min + i * dx;

  // Pointwise exp(-i V dt) and adiabatic bases.
  std::vector<CMat> vprop(N);
  std::vector<Mat> Ubasis(N);
  {
    Mat V;
    Vec E;
    Vec Ri(1);
    for (int i = 0; i < N; ++i) {
      Ri(0) = R(i);
      model.potential(Ri, V);
      vprop[i] = real_symmetric_propagator(V, dt);
      symmetric_eigen(V, E, Ubasis[i]);
    }
  }
  // Half kinetic step in momentum space with the 1/N of the inverse FFT.
  CVec kin_half(N);
  CVec kin_full(N);
  const double dk = 2.0 * kPi / (N * dx);
  for (int j = 0; j < N; ++j) {
    const double k = dk * (j < N / 2 ? j : j - N);
    kin_half(j) = std::polar(1.0 / N, -0.5 * mu * k * k * 0.5 * dt);
    kin_full(j) = std::polar(1.0 / N, -0.5 * mu * k * k * dt);
  }

  std::vector<std::unique_ptr<FftPair>> psi;
  for (int n = 0; n < F; ++n) psi.push_back(std::make_unique<FftPair>(N));
  {
    double norm = 0.0;
    for (int n = 0; n < F; ++n) {
      cplx* a = psi[n]->data();
      for (int i = 0; i < N; ++i) {
        if (n == packet.init_state) {
          const double y = R(i) - packet.R0;
          a[i] = std::exp(-0.5 * packet.alpha * y * y) * std::polar(1.0, y * packet.P0);
          norm += std::norm(a[i]) * dx;
        } else {
          a[i] = 0.0;
        }
      }
    }
    const double s = 1.0 / std::sqrt(norm);
    cplx* a = psi[packet.init_state]->data();
    for (int i = 0; i < N; ++i) a[i] *= s;
  }

  auto kinetic = [&](const CVec& factor) {
    for (int n = 0; n < F; ++n) {
      psi[n]->forward();
      cplx* a = psi[n]->data();
      for (int j = 0; j < N; ++j) a[j] *= factor(j);
      psi[n]->backward();
    }
  };
  CVec local(F);
  auto potential = [&]() {
    for (int i = 0; i < N; ++i) {
      for (int n = 0; n < F; ++n) local(n) = psi[n]->data()[i];
      local = vprop[i] * local;
      for (int n = 0; n < F; ++n) psi[n]->data()[i] = local(n);
    }
  };

  const int strip = std::max(1, N / 20);
  const int n_cols = 3 * F + 2 * F + 1;
  std::vector<std::vector<double>> rows;
  std::vector<double> times;
  DvrResult result;
  double max_inside = 0.0;

  // Returns probability inside the interaction region.
  auto record = [&](double t) {
    std::vector<double> row(static_cast<std::size_t>(n_cols), 0.0);
    double inside = 0.0;
    double boundary = 0.0;
    for (int i = 0; i < N; ++i) {
      for (int n = 0; n < F; ++n) local(n) = psi[n]->data()[i];
      const bool transmitted = R(i) > opt.divide_R;
      double point = 0.0;
      for (int n = 0; n < F; ++n) {
        const double p = std::norm(local(n)) * dx;
        point += p;
        row[n] += p;
        row[F + n + (transmitted ? 0 : F)] += p;
      }
      const CVec adia = Ubasis[i].transpose().cast<cplx>() * local;
      for (int n = 0; n < F; ++n) {
        row[3 * F + n + (transmitted ? 0 : F)] += std::norm(adia(n)) * dx;
      }
      if (std::abs(R(i)) < opt.interaction_radius) inside += point;
      if (i < strip || i >= N - strip) boundary += point;
    }
    double total = 0.0;
    for (int n = 0; n < F; ++n) total += row[n];
    row[n_cols - 1] = total;
    result.norm_error = std::max(result.norm_error, std::abs(total - 1.0));
    result.boundary_weight = std::max(result.boundary_weight, boundary);
    if (boundary > opt.boundary_tolerance) {
      throw ConvergenceError("split-operator oracle: boundary probability " + std::to_string(boundary) +
                             " at t=" + std::to_string(t) +
                             "; enlarge [R_min, R_max] or shorten t_max");
    }
    rows.push_back(std::move(row));
    times.push_back(t);
    return inside;
  };

  const int steps_per_record = std::max(1, static_cast<int>(std::lround(opt.record_dt / dt)));
  double t = 0.0;
  double inside = record(t);
  max_inside = inside;
  while (t < opt.t_max) {
    // Adjacent half kinetic steps inside a record interval are merged.
    kinetic(kin_half);
    for (int s = 0; s < steps_per_record; ++s) {
      potential();
      if (s + 1 < steps_per_record) kinetic(kin_full);
    }
    kinetic(kin_half);
    t += steps_per_record * dt;
    inside = record(t);
    max_inside = std::max(max_inside, inside);
    if (max_inside > 0.1 && inside < opt.stop_tolerance) break;
  }
  result.t_final = t;

  EnsembleSeries& s = result.series;
  for (int n = 0; n < F; ++n) s.names.push_back("P" + std::to_string(n + 1));
  for (const auto& nm : ObservableSpec::channels(Representation::Diabatic, opt.divide_R).column_names(F)) {
    s.names.push_back(nm);
  }
  for (const auto& nm : ObservableSpec::channels(Representation::Adiabatic, opt.divide_R).column_names(F)) {
    s.names.push_back(nm);
  }
  s.names.emplace_back("total");
  const auto nt = static_cast<Eigen::Index>(times.size());
  s.times.resize(nt);
  s.values.resize(n_cols, nt);
  s.errors = Mat::Zero(n_cols, nt);
  for (Eigen::Index j = 0; j < nt; ++j) {
    s.times(j) = times[j];
    for (int c = 0; c < n_cols; ++c) s.values(c, j) = rows[j][c];
  }
  s.n_trajectories = 1;
  for (const auto& kv : model.parameters()) s.metadata.emplace_back("model." + kv.first, kv.second);
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
  };
  s.metadata.emplace_back("method", "oracle:split_operator");
  s.metadata.emplace_back("alpha", num(packet.alpha));
  s.metadata.emplace_back("R0", num(packet.R0));
  s.metadata.emplace_back("P0", num(packet.P0));
  s.metadata.emplace_back("initial_state", std::to_string(packet.init_state + 1));
  s.metadata.emplace_back("grid", num(grid.R_min) + ":" + num(grid.R_max) + ":" + std::to_string(N));
  s.metadata.emplace_back("dt", num(dt));
  s.metadata.emplace_back("t_final", num(t));
  s.metadata.emplace_back("norm_error", num(result.norm_error));
  s.metadata.emplace_back("boundary_weight", num(result.boundary_weight));
  s.metadata.emplace_back("interaction_probability", num(inside));
  return result;
}

DvrResult split_operator_dvr_converged(const DiabaticModel& model, const Wavepacket& packet,
                                       const GridSpec& grid, const DvrOptions& options,
                                       double tolerance) {
  const DvrResult coarse = split_operator_dvr(model, packet, grid, options);
  GridSpec fine_grid = grid;
  fine_grid.dt = 0.5 * grid.dt;
  DvrOptions fine_opt = options;
  // Compare at the same final time.
  fine_opt.t_max = coarse.t_final;
  fine_opt.stop_tolerance = 0.0;
  DvrResult fine = split_operator_dvr(model, packet, fine_grid, fine_opt);
  const int F = model.n_states();
  double diff = 0.0;
  const auto j1 = coarse.series.times.size() - 1;
  const auto j2 = fine.series.times.size() - 1;
  for (int c = F; c < 5 * F; ++c) {
    diff = std::max(diff, std::abs(coarse.series.values(c, j1) - fine.series.values(c, j2)));
  }
  if (diff > tolerance) {
    throw ConvergenceError("split-operator oracle not converged in dt: channel change " +
                           std::to_string(diff) + " on halving dt=" + std::to_string(grid.dt));
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3e", diff);
  fine.series.metadata.emplace_back("dt_gate_difference", buf);
  return fine;
}

}  // namespace cpsdyn
