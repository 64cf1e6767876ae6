// SPDX-License-Identifier: Apache-2.0
#include "cpsdyn/linalg.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace cpsdyn {

namespace {

// exp(-i H t) for a 2x2 Hermitian H via the Pauli-vector closed form.
CMat propagator_2x2(cplx a, cplx b, cplx c, double t) {
  const double mean = 0.5 * (a.real() + c.real());
  const double half_diff = 0.5 * (a.real() - c.real());
  const double r = std::sqrt(half_diff * half_diff + std::norm(b));
  const double rt = r * t;
  const double sinc = std::abs(rt) < 1e-8 ? t * (1.0 - rt * rt / 6.0) : std::sin(rt) / r;
  const double cs = std::cos(rt);
  const cplx phase = std::polar(1.0, -mean * t);
  const cplx mi(0.0, -1.0);
  CMat out(2, 2);
  out(0, 0) = phase * (cs + mi * sinc * half_diff);
  out(1, 1) = phase * (cs - mi * sinc * half_diff);
  out(0, 1) = phase * mi * sinc * b;
  out(1, 0) = phase * mi * sinc * std::conj(b);
  return out;
}

}  // namespace

void symmetric_eigen(const Mat& V, Vec& E, Mat& U) {
  const auto n = V.rows();
  E.resize(n);
  U.resize(n, n);
  if (n == 1) {
    E(0) = V(0, 0);
    U(0, 0) = 1.0;
    return;
  }
  if (n == 2) {
    const double a = V(0, 0);
    const double b = 0.5 * (V(0, 1) + V(1, 0));
    const double c = V(1, 1);
    const double mean = 0.5 * (a + c);
    const double half_diff = 0.5 * (a - c);
    const double r = std::hypot(half_diff, b);
    // (cos θ, sin θ) spans the upper eigenvector.
    const double theta = 0.5 * std::atan2(b, half_diff);
    const double cs = std::cos(theta);
    const double sn = std::sin(theta);
    E(0) = mean - r;
    E(1) = mean + r;
    U(0, 0) = -sn;
    U(1, 0) = cs;
    U(0, 1) = cs;
    U(1, 1) = sn;
    return;
  }
  Eigen::SelfAdjointEigenSolver<Mat> solver(V);
  E = solver.eigenvalues();
  U = solver.eigenvectors();
}

CMat real_symmetric_propagator(const Mat& V, double t) {
  if (V.rows() == 2) {
    return propagator_2x2(V(0, 0), 0.5 * (V(0, 1) + V(1, 0)), V(1, 1), t);
  }
  Vec E;
  Mat U;
  symmetric_eigen(V, E, U);
  CVec phases(E.size());
  for (Eigen::Index k = 0; k < E.size(); ++k) phases(k) = std::polar(1.0, -E(k) * t);
  return U.cast<cplx>() * phases.asDiagonal() * U.transpose().cast<cplx>();
}

CMat hermitian_propagator(const CMat& H, double t) {
  if (H.rows() == 2) {
    return propagator_2x2(H(0, 0), 0.5 * (H(0, 1) + std::conj(H(1, 0))), H(1, 1), t);
  }
  Eigen::SelfAdjointEigenSolver<CMat> solver(H);
  const Vec& E = solver.eigenvalues();
  const CMat& U = solver.eigenvectors();
  CVec phases(E.size());
  for (Eigen::Index k = 0; k < E.size(); ++k) phases(k) = std::polar(1.0, -E(k) * t);
  return U * phases.asDiagonal() * U.adjoint();
}

}  // namespace cpsdyn
