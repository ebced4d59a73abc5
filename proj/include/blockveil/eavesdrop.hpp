// SPDX-License-Identifier: Apache-2.0
//
// Eve's moment attack. The block structure is invisible in the mean and
// covariance of x but shows up in the covariance of z = (A^T y) .* (A^T y):
//
//   Sigma_z = p(1-p) P B P + 2p(1-p) E_B + C
//   C       = p(kappa-1) P^2 + 2p^2 F + 4p sigma2 (M^2 .* M)
//             + 2 sigma2^2 ((A .* A)^T (A .* A) + G)
//
// with kappa = E[x^4] of an active entry. The commonly quoted form
//   Sigma_z = p(1-p) P B P + 2p E_B + C,  C = 2p P^2 + 2p^2 F + 2p sigma2 (M^2 .* M) + ...
// drops the same-block share of the p^2 F term and half of the
// signal-noise cross term; it is kept as MomentFormula::kPublished.
//
// Inverting this relation on an empirical Sigma_z gives an estimate of the
// indicator matrix B whose leading eigenvectors are then clustered.
#pragma once

#include <stdexcept>
#include <string>

#include "blockveil/channel.hpp"
#include "blockveil/linalg.hpp"
#include "blockveil/protocol.hpp"

namespace blockveil {

/// z_l = (A^T y_l) .* (A^T y_l), one column per snapshot.
Matrix hadamard_square_transform(const ChannelMatrix& ch, const Matrix& y);

/// E[z] = p diag(M^2) + sigma2 diag(M).
Vector mean_z(const ChannelMatrix& ch, double p, double sigma2);

enum class MomentFormula {
  kExact,      ///< matches the moments of the model exactly
  kPublished,  ///< 2p E_B and 2p sigma2 (M^2 .* M), for comparison
};

/// Coefficient of E_B in Sigma_z: 2p(1-p), or 2p for kPublished.
double e_b_coefficient(double p, MomentFormula formula = MomentFormula::kExact);

/// C. Under kPublished the P^2 term is still p(kappa - 1) P^2 (equal to
/// 2p P^2 for Gaussian entries).
Matrix correction_matrix(const ChannelMatrix& ch, double p, double sigma2,
                         Constellation constellation = Constellation::kGaussian,
                         MomentFormula formula = MomentFormula::kExact);

struct CovarianceModel {
  Matrix sigma_z;
  Matrix structure_term;     ///< p(1-p) P B P
  Matrix fourth_order_term;  ///< e_b_coefficient(p) E_B
  Matrix c;
};

CovarianceModel analytic_covariance(const ChannelMatrix& ch, const BlockStructure& bs, double p,
                                    double sigma2,
                                    Constellation constellation = Constellation::kGaussian,
                                    MomentFormula formula = MomentFormula::kExact);

/// (1/L) sum_l (z_l - center)(z_l - center)^T.
Matrix empirical_covariance(const Matrix& z, const Vector& center);

/// Streaming form of empirical_covariance. Batches are folded in the order
/// they are added, so a fixed batching gives bit-identical results.
class CovarianceAccumulator {
 public:
  explicit CovarianceAccumulator(Vector center);

  void add(const Matrix& z);
  long count() const { return count_; }
  Matrix covariance() const;

 private:
  Vector center_;
  Matrix sum_;  // lower triangle only
  long count_ = 0;
};

class IllConditionedError : public std::runtime_error {
 public:
  IllConditionedError(const std::string& what, double condition)
      : std::runtime_error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

/// Largest condition number of P accepted by the debiasing step.
inline constexpr double kMaxPCondition = 1e10;

struct DebiasParams {
  double p = 0.0;
  int d = 1;
  double sigma2 = 0.0;
  Constellation constellation = Constellation::kGaussian;
  MomentFormula formula = MomentFormula::kExact;
};

/// Precomputed pieces of the inversion
///   B~ = (p(1-p))^{-1} P^{-1} (Sigma_hat - C - c_E gamma I) P^{-1}
/// with c_E = e_b_coefficient(p), E_B being replaced by its expected
/// diagonal gamma I
/// for one channel, so repeated estimates reuse the factorisation of P.
class Debiaser {
 public:
  Debiaser(const ChannelMatrix& ch, const DebiasParams& params);

  Matrix apply(const Matrix& sigma_hat) const;
  const Matrix& offset() const { return offset_; }  ///< C + c_E gamma I
  double gamma() const { return gamma_; }
  double condition_estimate() const { return condition_; }

 private:
  DebiasParams params_;
  Eigen::LLT<Matrix> chol_;
  Matrix offset_;
  double gamma_;
  double condition_;
};

Matrix debias(const Matrix& sigma_hat, const ChannelMatrix& ch, const DebiasParams& params);

struct LeadingEigenvectors {
  Matrix u;            ///< n x r, orthonormal columns, largest eigenvalue first
  Vector eigenvalues;  ///< the r largest, descending
  double gap;          ///< lambda_r - lambda_{r+1} (+inf when r == n)
  bool unstable;       ///< gap below 1e-12
};

/// Eigenvectors of (b + b^T)/2 for the r algebraically largest eigenvalues.
/// Each column is signed so its largest-magnitude entry is positive.
LeadingEigenvectors leading_eigenvectors(const Matrix& b_tilde, int r);

/// One pass over the rows of u: a row joins the nearest centroid when it
/// lies within 1/sqrt(2d) of it (the centroid becomes the running mean of
/// its members), otherwise it opens a new cluster. Labels follow discovery
/// order; the cluster count is whatever the pass produced.
BlockStructure greedy_kmeans(const Matrix& u, int d);

/// True iff both partitions induce the same indicator matrix.
bool structures_equal(const BlockStructure& a, const BlockStructure& b);

enum class Centering { kModelMean, kSampleMean };

struct AttackParams {
  double p = 0.0;
  int r = 1;
  double sigma2 = 0.0;
  Constellation constellation = Constellation::kGaussian;
  Centering centering = Centering::kModelMean;
  MomentFormula formula = MomentFormula::kExact;
};

struct MomentEstimate {
  Vector z_bar;
  Matrix sigma_hat;
  Matrix b_tilde;
  Matrix u_tilde;
  Vector eigenvalues;
  BlockStructure b_hat;
  bool eigen_gap_warning = false;
  /// False when clustering found a number of blocks different from r; the
  /// attack is then reported as failed.
  bool cluster_count_matches = false;
};

/// Full pipeline: transform, center, covariance, debias, eigenvectors,
/// greedy clustering. Rows are clustered in natural index order.
MomentEstimate eavesdrop(const Matrix& y, const ChannelMatrix& ch, const AttackParams& params);

/// structures_equal(estimate.b_hat, truth) with the cluster-count check.
bool attack_succeeded(const MomentEstimate& estimate, const BlockStructure& truth);

}  // namespace blockveil
