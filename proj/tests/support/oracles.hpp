// Independent reference computations shared by the unit and acceptance
// tests.
#pragma once

#include <cmath>

#include "blockveil/channel.hpp"
#include "blockveil/linalg.hpp"
#include "blockveil/protocol.hpp"

namespace oracle {

using blockveil::BlockStructure;
using blockveil::ChannelMatrix;
using blockveil::Matrix;
using blockveil::Vector;

struct Moments {
  Vector mean;
  Matrix cov;
};

// Exact mean and covariance of z = (A^T y)^2 for Gaussian active entries.
// Given the set S of active blocks, u = A^T y is N(0, K_S) with
// K_S = M D_S M + sigma2 M, so E[z_i z_j | S] = 2 K_ij^2 + K_ii K_jj.
// Averaging over the 2^r patterns gives the moments exactly.
inline Moments z_moments_gaussian(const ChannelMatrix& ch, const BlockStructure& bs, double p, double sigma2) {
  const int n = ch.cols();
  const int r = bs.block_count();
  const Matrix& m = ch.gram();
  Matrix ezz = Matrix::Zero(n, n);
  Vector ez = Vector::Zero(n);
  for (unsigned s = 0; s < (1u << r); ++s) {
    int k = 0;
    Vector act = Vector::Zero(n);
    for (int q = 0; q < r; ++q) {
      if (!((s >> q) & 1u)) continue;
      ++k;
      for (int i : bs.block(q)) act(i) = 1.0;
    }
    const double w = std::pow(p, k) * std::pow(1.0 - p, r - k);
    const Matrix kmat = m * act.asDiagonal() * m + sigma2 * m;
    const Vector dk = kmat.diagonal();
    ez += w * dk;
    ezz += w * (2.0 * kmat.cwiseProduct(kmat) + dk * dk.transpose());
  }
  return {ez, ezz - ez * ez.transpose()};
}

// Literal sum for E[P] under isotropic unit columns: 1 on the diagonal,
// E[(a_i . a_j)^2] = 1/m off it.
inline Matrix isotropic_p_mean(int n, int m) {
  Matrix e = Matrix::Constant(n, n, 1.0 / m);
  e.diagonal().setOnes();
  return e;
}

}  // namespace oracle
