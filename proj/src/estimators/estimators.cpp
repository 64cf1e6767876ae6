// SPDX-License-Identifier: Apache-2.0
#include "cpsdyn/estimators.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cpsdyn {

ObservableSpec ObservableSpec::population(int n, Representation basis) {
  ObservableSpec s;
  s.kind = Kind::Population;
  s.n = n;
  s.basis = basis;
  return s;
}

ObservableSpec ObservableSpec::difference(int n1, int n0) {
  ObservableSpec s;
  s.kind = Kind::PopulationDifference;
  s.n = n1;
  s.m = n0;
  return s;
}

ObservableSpec ObservableSpec::channels(Representation basis, double divide_R) {
  ObservableSpec s;
  s.kind = Kind::ScatteringChannels;
  s.basis = basis;
  s.divide_R = divide_R;
  return s;
}

void ObservableSpec::validate(int F) const {
  auto check = [F](int k) {
    if (k < 0 || k >= F) {
      throw DomainError("observable state index " + std::to_string(k) + " out of range for F=" +
                        std::to_string(F));
    }
  };
  if (kind != Kind::ScatteringChannels) check(n);
  if (kind == Kind::PopulationDifference) check(m);
}

std::vector<std::string> ObservableSpec::column_names(int F) const {
  const std::string suffix = basis == Representation::Adiabatic ? "_adia" : "";
  switch (kind) {
    case Kind::Population:
      return {"P" + std::to_string(n + 1) + suffix};
    case Kind::PopulationDifference:
      return {"D" + std::to_string(n + 1) + std::to_string(m + 1)};
    case Kind::ScatteringChannels: {
      std::vector<std::string> out;
      for (int k = 0; k < F; ++k) out.push_back("T" + std::to_string(k + 1) + suffix);
      for (int k = 0; k < F; ++k) out.push_back("R" + std::to_string(k + 1) + suffix);
      return out;
    }
  }
  return {};
}

double initial_electronic_weight(const ElectronicMappingState& s0, int init_state) {
  const double knn = 0.5 * (s0.x(init_state) * s0.x(init_state) + s0.p(init_state) * s0.p(init_state)) -
                     s0.gamma;
  return s0.n_states() * knn;
}

double population_estimate(const ElectronicMappingState& s, int n) {
  return 0.5 * (s.x(n) * s.x(n) + s.p(n) * s.p(n)) - s.gamma;
}

double adiabatic_population_estimate(const ElectronicMappingState& s, const Mat& U, int n) {
  const double xt = U.col(n).dot(s.x);
  const double pt = U.col(n).dot(s.p);
  return 0.5 * (xt * xt + pt * pt) - s.gamma;
}

double state_population(Propagation propagation, const TrajectoryState& s, Integrator& integ,
                        Representation basis, int n) {
  if (propagation == Propagation::SurfaceHopping) {
    if (basis == Representation::Adiabatic) return n == s.active ? 1.0 : 0.0;
    const double u = integ.adiabatic().U(n, s.active);
    return u * u;
  }
  if (basis == Representation::Adiabatic) {
    return adiabatic_population_estimate(s.mapping, integ.adiabatic().U, n);
  }
  return population_estimate(s.mapping, n);
}

int total_columns(const std::vector<ObservableSpec>& specs, int F) {
  int n = 1;  // trailing total population
  for (const auto& s : specs) n += static_cast<int>(s.column_names(F).size());
  return n;
}

void evaluate_observables(const std::vector<ObservableSpec>& specs, Propagation propagation,
                          const TrajectoryState& s, Integrator& integ, double* out) {
  const int F = integ.model().n_states();
  int c = 0;
  for (const auto& spec : specs) {
    switch (spec.kind) {
      case ObservableSpec::Kind::Population:
        out[c++] = state_population(propagation, s, integ, spec.basis, spec.n);
        break;
      case ObservableSpec::Kind::PopulationDifference:
        out[c++] = state_population(propagation, s, integ, Representation::Diabatic, spec.n) -
                   state_population(propagation, s, integ, Representation::Diabatic, spec.m);
        break;
      case ObservableSpec::Kind::ScatteringChannels: {
        const bool transmitted = s.R(0) > spec.divide_R;
        for (int k = 0; k < F; ++k) {
          const double pop = state_population(propagation, s, integ, spec.basis, k);
          out[c + k] = transmitted ? pop : 0.0;
          out[c + F + k] = transmitted ? 0.0 : pop;
        }
        c += 2 * F;
        break;
      }
    }
  }
  double total = 0.0;
  for (int k = 0; k < F; ++k) {
    total += state_population(propagation, s, integ, Representation::Diabatic, k);
  }
  out[c] = total;
}

// ---------------------------------------------------------------------------

int EnsembleSeries::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  throw std::out_of_range("no column named '" + name + "'");
}

void EnsembleSeries::write_csv(std::ostream& os) const {
  for (const auto& [k, v] : metadata) os << "# " << k << ": " << v << '\n';
  os << "# n_trajectories: " << n_trajectories << '\n';
  os << "# n_failed: " << n_failed << '\n';
  os << 't';
  for (const auto& n : names) os << ',' << n << ',' << n << "_err";
  os << '\n';
  char buf[64];
  for (Eigen::Index j = 0; j < times.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.10g", times(j));
    os << buf;
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      std::snprintf(buf, sizeof buf, ",%.12e,%.6e", values(i, j), errors(i, j));
      os << buf;
    }
    os << '\n';
  }
}

void EnsembleSeries::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(f);
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

EnsembleSeries EnsembleSeries::read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  EnsembleSeries s;
  std::string line;
  std::vector<std::vector<double>> rows;
  bool header = false;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(": ");
      if (colon == std::string::npos) continue;
      const std::string key = line.substr(2, colon - 2);
      const std::string val = line.substr(colon + 2);
      if (key == "n_trajectories") {
        s.n_trajectories = std::stol(val);
      } else if (key == "n_failed") {
        s.n_failed = std::stol(val);
      } else {
        s.metadata.emplace_back(key, val);
      }
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header) {
      for (std::size_t i = 1; i + 1 < cells.size(); i += 2) s.names.push_back(cells[i]);
      header = true;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(std::stod(c));
    rows.push_back(std::move(row));
  }
  const auto nt = static_cast<Eigen::Index>(rows.size());
  const auto nc = static_cast<Eigen::Index>(s.names.size());
  s.times.resize(nt);
  s.values.resize(nc, nt);
  s.errors.resize(nc, nt);
  for (Eigen::Index j = 0; j < nt; ++j) {
    if (static_cast<Eigen::Index>(rows[j].size()) != 1 + 2 * nc) {
      throw std::runtime_error("malformed row in '" + path + "'");
    }
    s.times(j) = rows[j][0];
    for (Eigen::Index i = 0; i < nc; ++i) {
      s.values(i, j) = rows[j][1 + 2 * i];
      s.errors(i, j) = rows[j][2 + 2 * i];
    }
  }
  return s;
}

// ---------------------------------------------------------------------------

SeriesAccumulator::SeriesAccumulator(int n_columns, int n_times)
    : mean_(Mat::Zero(n_columns, n_times)), m2_(Mat::Zero(n_columns, n_times)) {}

void SeriesAccumulator::add(const Mat& sample) {
  ++count_;
  const Mat delta = sample - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_.array() += delta.array() * (sample - mean_).array();
}

void SeriesAccumulator::merge(const SeriesAccumulator& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  const Mat delta = other.mean_ - mean_;
  mean_ += delta * (nb / n);
  m2_ += other.m2_ + delta.cwiseAbs2() * (na * nb / n);
  count_ += other.count_;
}

void SeriesAccumulator::finish(Mat& mean, Mat& stderr_of_mean) const {
  if (count_ == 0) throw std::runtime_error("empty ensemble: no successful trajectories");
  mean = mean_;
  if (count_ < 2) {
    stderr_of_mean = Mat::Zero(mean_.rows(), mean_.cols());
    return;
  }
  const double n = static_cast<double>(count_);
  stderr_of_mean = (m2_.array().max(0.0) / ((n - 1.0) * n)).sqrt().matrix();
}

void normalize_by_total(EnsembleSeries& series) {
  const int total = series.column("total");
  for (Eigen::Index j = 0; j < series.times.size(); ++j) {
    const double denom = series.values(total, j);
    if (denom == 0.0) continue;
    for (Eigen::Index i = 0; i < series.values.rows(); ++i) {
      if (i == total) continue;
      series.values(i, j) /= denom;
      series.errors(i, j) /= std::abs(denom);
    }
  }
}

}  // namespace cpsdyn
