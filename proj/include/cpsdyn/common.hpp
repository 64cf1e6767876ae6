// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace cpsdyn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using cplx = std::complex<double>;

/// Ordered key/value dump used for output provenance headers.
using ParameterDump = std::vector<std::pair<std::string, std::string>>;

inline constexpr double kPi = 3.14159265358979323846;

// Hartree atomic units.
inline constexpr double kEvToHartree = 0.0367493;
inline constexpr double kAuTimeToFs = 0.02418884;
inline constexpr double kSpeedOfLightAu = 137.035999;

/// Argument outside the admissible region of a formula (e.g. γ ≤ −1/F).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Adiabatic energies closer than the degeneracy threshold.
class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A reference calculation failed its own convergence or boundary gate.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid run configuration; carries the 1-based source line when known.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace cpsdyn
