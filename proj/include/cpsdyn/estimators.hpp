// SPDX-License-Identifier: Apache-2.0
//
// Weighted ensemble estimators. A trajectory contributes
//
//   w_branch * F K_nn(x0, p0; gamma) * B(x_t, p_t; gamma)
//
// to each observable, and the raw estimate is the plain mean over all
// successful trajectories.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cpsdyn/dynamics.hpp"
#include "cpsdyn/models.hpp"
#include "cpsdyn/phasespace.hpp"

namespace cpsdyn {

struct ObservableSpec {
  enum class Kind { Population, PopulationDifference, ScatteringChannels };

  Kind kind = Kind::Population;
  int n = 0;
  int m = 0;
  Representation basis = Representation::Diabatic;
  double divide_R = 0.0;

  static ObservableSpec population(int n, Representation basis = Representation::Diabatic);
  /// P_n1 - P_n0
  static ObservableSpec difference(int n1, int n0);
  /// Columns T1..TF then R1..RF, split at divide_R on the first coordinate.
  static ObservableSpec channels(Representation basis, double divide_R = 0.0);

  void validate(int F) const;
  std::vector<std::string> column_names(int F) const;
};

/// F K_nn at the initial phase point.
double initial_electronic_weight(const ElectronicMappingState& s0, int init_state);

/// K^-1_nn = (x_n^2 + p_n^2)/2 - gamma; negative values are allowed.
double population_estimate(const ElectronicMappingState& s, int n);

/// Same estimate after rotating g into the adiabatic basis with U.
double adiabatic_population_estimate(const ElectronicMappingState& s, const Mat& U, int n);

/// Electronic population of state n for either propagation kind, before
/// trajectory weights. FSSH uses the active surface: delta_{n,a} in the
/// adiabatic basis and |U_{n,a}|^2 in the diabatic basis.
double state_population(Propagation propagation, const TrajectoryState& s, Integrator& integ,
                        Representation basis, int n);

/// Fills `out` with one value per column of `specs` (in order) followed by
/// the diabatic total population.
void evaluate_observables(const std::vector<ObservableSpec>& specs, Propagation propagation,
                          const TrajectoryState& s, Integrator& integ, double* out);

int total_columns(const std::vector<ObservableSpec>& specs, int F);

struct EnsembleSeries {
  Vec times;
  std::vector<std::string> names;
  Mat values;  // columns x times
  Mat errors;  // standard error of the mean, same shape
  long n_trajectories = 0;
  long n_failed = 0;
  ParameterDump metadata;

  /// Index of a named column; throws std::out_of_range when absent.
  int column(const std::string& name) const;
  double final_value(const std::string& name) const { return values(column(name), times.size() - 1); }
  double final_error(const std::string& name) const { return errors(column(name), times.size() - 1); }

  /// `# key: value` header lines, then `t,obs,obs_err,...` rows.
  void write_csv(std::ostream& os) const;
  void write_csv(const std::string& path) const;
  /// Parses a file written by `write_csv`.
  static EnsembleSeries read_csv(const std::string& path);
};

/// Running weighted-sample statistics per (column, time). Partial
/// accumulators merge in a fixed order so the result does not depend on how
/// trajectories were scheduled.
class SeriesAccumulator {
 public:
  SeriesAccumulator(int n_columns, int n_times);

  void add(const Mat& sample);  // columns x times
  void merge(const SeriesAccumulator& other);
  long count() const noexcept { return count_; }

  /// Raw mean and standard error of the mean. Errors if count() == 0.
  void finish(Mat& mean, Mat& stderr_of_mean) const;

 private:
  long count_ = 0;
  Mat mean_;
  Mat m2_;
};

/// Divides population-type columns by the total-population column at each
/// time. Errors are scaled by the same factor.
void normalize_by_total(EnsembleSeries& series);

}  // namespace cpsdyn
