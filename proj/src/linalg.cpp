// SPDX-License-Identifier: Apache-2.0
#include "blockveil/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace blockveil {

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

double symmetric_spectral_norm(const Matrix& s) {
  const auto range = symmetric_eigen_range(s);
  return std::max(std::abs(range.min), std::abs(range.max));
}

EigenRange symmetric_eigen_range(const Matrix& s) {
  if (s.size() == 0) return {0.0, 0.0};
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  return {ev(0), ev(ev.size() - 1)};
}

double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

double relative_frobenius_error(const Matrix& a, const Matrix& b) {
  const double denom = b.norm();
  const double diff = (a - b).norm();
  return denom > 0.0 ? diff / denom : diff;
}

bool is_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = j + 1; i < a.rows(); ++i)
      if (std::abs(a(i, j) - a(j, i)) > tol) return false;
  return true;
}

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace blockveil
