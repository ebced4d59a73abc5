// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace blockveil {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Largest singular value.
double spectral_norm(const Matrix& a);

/// Spectral norm of a symmetric matrix (largest |eigenvalue|).
double symmetric_spectral_norm(const Matrix& s);

/// Extreme eigenvalues of a symmetric matrix.
struct EigenRange {
  double min;
  double max;
};
EigenRange symmetric_eigen_range(const Matrix& s);

double max_abs(const Matrix& a);

/// ||a - b||_F / ||b||_F, or ||a||_F when b is zero.
double relative_frobenius_error(const Matrix& a, const Matrix& b);

bool is_symmetric(const Matrix& a, double tol = 0.0);

/// (a + a^T) / 2
Matrix symmetrize(const Matrix& a);

}  // namespace blockveil
