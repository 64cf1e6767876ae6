// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cpsdyn/common.hpp"

namespace cpsdyn {

/// Eigendecomposition of a real symmetric matrix, ascending eigenvalues.
/// 2x2 input takes a closed-form path; columns of `U` are normalized
/// eigenvectors with no sign convention applied.
void symmetric_eigen(const Mat& V, Vec& E, Mat& U);

/// exp(-i V t) for real symmetric V.
CMat real_symmetric_propagator(const Mat& V, double t);

/// exp(-i H t) for complex Hermitian H.
CMat hermitian_propagator(const CMat& H, double t);

}  // namespace cpsdyn
