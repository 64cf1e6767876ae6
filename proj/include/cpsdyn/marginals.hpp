// SPDX-License-Identifier: Apache-2.0
//
// Marginal quasi-probability distributions of the mapping kernel on a plane
// of two phase-space coordinates, and hybrid nuclear/electronic joint
// distributions for a harmonic mode coupled to a two-level system.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cpsdyn/common.hpp"
#include "cpsdyn/phasespace.hpp"

namespace cpsdyn {

/// One axis of the marginal plane: x_index or p_index (0-based).
struct PhaseAxis {
  bool momentum = false;
  int index = 0;

  /// Parses "x1", "p2", ... (1-based).
  static PhaseAxis parse(const std::string& text);
  std::string label() const;
};

struct UniformAxis {
  double min = -2.0;
  double max = 2.0;
  int points = 41;

  double step() const { return (max - min) / points; }
  /// Bin centre; grids are cell-centred.
  double at(int i) const { return min + (i + 0.5) * step(); }
};

/// Values on a cell-centred 2-D grid. `values(i, j)` belongs to
/// (axis1.at(i), axis2.at(j)).
struct Grid2D {
  UniformAxis axis1;
  UniformAxis axis2;
  std::string label1 = "x1";
  std::string label2 = "x2";
  CMat values;
  Mat stderr_;  // zero for closed forms
  ParameterDump metadata;

  /// `# key: value` header (axes, gamma_scheme, nm_pair, ...), then
  /// `x1,x2,re,im,stderr` rows. `scale` divides the printed coordinates.
  void write_csv(std::ostream& os, double scale = 1.0) const;
  void write_csv(const std::string& path, double scale = 1.0) const;
};

/// Closed-form F = 2 marginal matrix at (a, b) on the (x1, x2) plane, or on
/// the (x1, p2) plane when `momentum_second` is set. Zero outside the disc
/// a^2 + b^2 <= 2 (1 + 2 gamma).
CMat marginal_f2_analytic(double a, double b, double gamma, bool momentum_second = false);

/// Signed two-point combination of the above at gamma = +delta and -delta.
CMat marginal_f2_weighted(double a, double b, double delta, bool momentum_second = false);

/// Radius of the outer support disc, sqrt(2 (1 + F gamma_max)).
double support_radius(const GammaScheme& scheme);

struct MarginalMcOptions {
  int n = 0;  // kernel entry (0-based)
  int m = 0;
  PhaseAxis first{false, 0};
  PhaseAxis second{false, 1};
  UniformAxis axis1;
  UniformAxis axis2;
  long n_samples = 1000000;
  std::uint64_t seed = 1;
  int workers = 1;
  /// Samples per random stream; fixed so results do not depend on workers.
  long shard_size = 1 << 16;
};

struct MarginalMcResult {
  Grid2D grid;
  std::string warning;  // set when the expected count per bin is below 10
};

/// Histogram estimate of the marginal of K_nm with measure F dx dp / Omega.
/// Pair schemes split samples evenly between the branches and apply the
/// signed weights.
MarginalMcResult marginal_mc(const GammaScheme& scheme, const MarginalMcOptions& options);

/// Closed-form F = 2 grid (single or pair scheme) on the same bins, evaluated
/// at the bin centres.
Grid2D marginal_f2_grid(const GammaScheme& scheme, int n, int m, bool momentum_second,
                        const UniformAxis& axis1, const UniformAxis& axis2);

// ---------------------------------------------------------------------------
// Hybrid joint distributions of a harmonic mode (m = omega = 1) and a
// two-level system. Electronic index 0 is spin up, 1 is spin down.

enum class HybridState {
  Bell,        // (|0>|down> + |1>|up>) / sqrt(2)
  ProductCat,  // (|0> + |1>)/sqrt(2) (x) (|up> + |down>)/sqrt(2)
};

HybridState parse_hybrid_state(const std::string& name);
std::string to_string(HybridState s);

/// Wigner function of |i><j| for i, j in {0, 1}.
cplx harmonic_wigner(int i, int j, double R, double P);

/// Electronic 2x2 block B_nm(R, P) = sum_ij rho_(i n),(j m) W_ij(R, P).
CMat hybrid_block(HybridState state, double R, double P);

/// Joint value sum_nm B_nm(R, P) M_nm(x1, x2) with M from the F = 2 closed
/// forms for `scheme`.
cplx hybrid_joint(HybridState state, const GammaScheme& scheme, double R, double P, double x1,
                  double x2);

/// Grids of B_nm over (R, P), one per (n, m).
std::vector<Grid2D> hybrid_block_grids(HybridState state, const UniformAxis& R_axis,
                                       const UniformAxis& P_axis);

}  // namespace cpsdyn
