// SPDX-License-Identifier: Apache-2.0
#include "blockveil/eavesdrop.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace blockveil {

Matrix hadamard_square_transform(const ChannelMatrix& ch, const Matrix& y) {
  if (y.rows() != ch.rows())
    throw std::invalid_argument("snapshot height " + std::to_string(y.rows()) +
                                " does not match channel height " + std::to_string(ch.rows()));
  Matrix z(ch.cols(), y.cols());
  z.noalias() = ch.a().transpose() * y;
  return z.cwiseProduct(z);
}

Vector mean_z(const ChannelMatrix& ch, double p, double sigma2) {
  const Matrix& m = ch.gram();
  // diag(M^2)_i = sum_k m_ik^2 = row sums of P
  return p * ch.gram_squared().rowwise().sum() + sigma2 * m.diagonal();
}

double e_b_coefficient(double p, MomentFormula formula) {
  return formula == MomentFormula::kExact ? 2.0 * p * (1.0 - p) : 2.0 * p;
}

Matrix correction_matrix(const ChannelMatrix& ch, double p, double sigma2, Constellation constellation,
                         MomentFormula formula) {
  const Matrix& m = ch.gram();
  const Matrix& p_mat = ch.gram_squared();
  const Matrix aa = ch.a().cwiseProduct(ch.a());
  const Matrix aa_gram = aa.transpose() * aa;
  const Matrix g = p_mat - aa_gram;

  Matrix c = (p * (kurtosis(constellation) - 1.0)) * (p_mat * p_mat);
  if (p != 0.0) {
    c += (2.0 * p * p) * fourth_order_f(ch);
    const double cross = formula == MomentFormula::kExact ? 4.0 : 2.0;
    c += (cross * p * sigma2) * (m * m).cwiseProduct(m);
  }
  c += (2.0 * sigma2 * sigma2) * (aa_gram + g);
  return symmetrize(c);
}

CovarianceModel analytic_covariance(const ChannelMatrix& ch, const BlockStructure& bs, double p,
                                    double sigma2, Constellation constellation, MomentFormula formula) {
  if (bs.size() != ch.cols()) throw std::invalid_argument("block structure does not match channel width");
  const Matrix& pm = ch.gram_squared();
  const auto fo = fourth_order_matrices(ch, bs);
  CovarianceModel out;
  out.structure_term = symmetrize((p * (1.0 - p)) * (pm * indicator_matrix(bs) * pm));
  out.fourth_order_term = e_b_coefficient(p, formula) * fo.e_b;
  out.c = correction_matrix(ch, p, sigma2, constellation, formula);
  out.sigma_z = out.structure_term + out.fourth_order_term + out.c;
  return out;
}

Matrix empirical_covariance(const Matrix& z, const Vector& center) {
  CovarianceAccumulator acc(center);
  acc.add(z);
  return acc.covariance();
}

CovarianceAccumulator::CovarianceAccumulator(Vector center)
    : center_(std::move(center)), sum_(Matrix::Zero(center_.size(), center_.size())) {}

void CovarianceAccumulator::add(const Matrix& z) {
  if (z.rows() != center_.size()) throw std::invalid_argument("z batch height does not match center");
  if (z.cols() == 0) return;
  const Matrix centered = z.colwise() - center_;
  sum_.selfadjointView<Eigen::Lower>().rankUpdate(centered);
  count_ += z.cols();
}

Matrix CovarianceAccumulator::covariance() const {
  if (count_ == 0) throw std::logic_error("covariance of an empty sample");
  Matrix out = sum_.selfadjointView<Eigen::Lower>();
  return out / static_cast<double>(count_);
}

Debiaser::Debiaser(const ChannelMatrix& ch, const DebiasParams& params) : params_(params) {
  if (!(params.p > 0.0 && params.p < 1.0))
    throw std::invalid_argument("debiasing needs 0 < p < 1");
  if (params.d < 1 || ch.cols() % params.d != 0)
    throw std::invalid_argument("block length must divide n");
  chol_.compute(ch.gram_squared());
  const double rcond = chol_.info() == Eigen::Success ? chol_.rcond() : 0.0;
  condition_ = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(condition_ <= kMaxPCondition)) {
    std::ostringstream msg;
    msg << "P = (A^T A) .* (A^T A) is ill-conditioned (condition estimate " << condition_ << ")";
    throw IllConditionedError(msg.str(), condition_);
  }
  gamma_ = attack_gamma(ch.cols(), ch.rows(), params.d);
  offset_ = correction_matrix(ch, params.p, params.sigma2, params.constellation, params.formula);
  offset_.diagonal().array() += e_b_coefficient(params.p, params.formula) * gamma_;
}

Matrix Debiaser::apply(const Matrix& sigma_hat) const {
  if (sigma_hat.rows() != offset_.rows() || sigma_hat.cols() != offset_.cols())
    throw std::invalid_argument("covariance dimension does not match channel");
  Matrix w = chol_.solve(sigma_hat - offset_);  // P^{-1} S
  Matrix b = chol_.solve(w.transpose());        // P^{-1} S^T P^{-1} = (P^{-1} S P^{-1})^T
  b /= params_.p * (1.0 - params_.p);
  return symmetrize(b);
}

Matrix debias(const Matrix& sigma_hat, const ChannelMatrix& ch, const DebiasParams& params) {
  return Debiaser(ch, params).apply(sigma_hat);
}

LeadingEigenvectors leading_eigenvectors(const Matrix& b_tilde, int r) {
  const Eigen::Index n = b_tilde.rows();
  if (b_tilde.cols() != n) throw std::invalid_argument("matrix must be square");
  if (r < 1 || r > n) throw std::invalid_argument("need 1 <= r <= n");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(b_tilde));
  if (eig.info() != Eigen::Success) throw std::runtime_error("symmetric eigensolver failed");
  const Vector& ev = eig.eigenvalues();  // ascending

  LeadingEigenvectors out;
  out.u = Matrix(n, r);
  out.eigenvalues = Vector(r);
  for (int k = 0; k < r; ++k) {
    const Eigen::Index src = n - 1 - k;
    Vector col = eig.eigenvectors().col(src);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0.0) col = -col;
    out.u.col(k) = col;
    out.eigenvalues(k) = ev(src);
  }
  out.gap = r < n ? ev(n - r) - ev(n - r - 1) : std::numeric_limits<double>::infinity();
  out.unstable = out.gap < 1e-12;
  return out;
}

BlockStructure greedy_kmeans(const Matrix& u, int d) {
  if (d < 1) throw std::invalid_argument("block length must be >= 1");
  if (u.rows() == 0) throw std::invalid_argument("no rows to cluster");
  const double radius = 1.0 / std::sqrt(2.0 * d);
  std::vector<Vector> centroids;
  std::vector<int> sizes;
  std::vector<int> labels(static_cast<std::size_t>(u.rows()));

  for (Eigen::Index j = 0; j < u.rows(); ++j) {
    const Vector row = u.row(j).transpose();
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < centroids.size(); ++q) {
      const double dist = (centroids[q] - row).norm();
      if (dist < best_dist) {
        best_dist = dist;
        best = static_cast<int>(q);
      }
    }
    if (best >= 0 && best_dist < radius) {
      auto& c = centroids[static_cast<std::size_t>(best)];
      auto& count = sizes[static_cast<std::size_t>(best)];
      c = (c * count + row) / (count + 1);
      ++count;
      labels[static_cast<std::size_t>(j)] = best;
    } else {
      labels[static_cast<std::size_t>(j)] = static_cast<int>(centroids.size());
      centroids.push_back(row);
      sizes.push_back(1);
    }
  }
  return BlockStructure::from_labels(std::move(labels));
}

bool structures_equal(const BlockStructure& a, const BlockStructure& b) {
  if (a.size() != b.size()) throw std::invalid_argument("structures cover different index sets");
  if (a.block_count() != b.block_count()) return false;
  // Same partition iff the first-occurrence relabelings coincide.
  std::vector<int> map_a(static_cast<std::size_t>(a.block_count()), -1);
  std::vector<int> map_b(static_cast<std::size_t>(b.block_count()), -1);
  int next = 0;
  for (int i = 0; i < a.size(); ++i) {
    auto& la = map_a[static_cast<std::size_t>(a.label(i))];
    auto& lb = map_b[static_cast<std::size_t>(b.label(i))];
    if (la < 0 && lb < 0) {
      la = lb = next++;
    } else if (la != lb) {
      return false;
    }
  }
  return true;
}

MomentEstimate eavesdrop(const Matrix& y, const ChannelMatrix& ch, const AttackParams& params) {
  const int n = ch.cols();
  if (params.r < 1 || n % params.r != 0) throw std::invalid_argument("block count must divide n");
  if (y.cols() < 1) throw std::invalid_argument("need at least one snapshot");
  const int d = n / params.r;

  const Matrix z = hadamard_square_transform(ch, y);
  Vector center = mean_z(ch, params.p, params.sigma2);
  if (params.centering == Centering::kSampleMean) center = z.rowwise().mean();
  Matrix sigma_hat = empirical_covariance(z, center);
  Matrix b_tilde =
      Debiaser(ch, {params.p, d, params.sigma2, params.constellation, params.formula}).apply(sigma_hat);
  auto eig = leading_eigenvectors(b_tilde, params.r);
  BlockStructure b_hat = greedy_kmeans(eig.u, d);
  const bool count_ok = b_hat.block_count() == params.r;
  return MomentEstimate{std::move(center), std::move(sigma_hat), std::move(b_tilde), std::move(eig.u),
                        std::move(eig.eigenvalues), std::move(b_hat), eig.unstable, count_ok};
}

bool attack_succeeded(const MomentEstimate& estimate, const BlockStructure& truth) {
  return estimate.cluster_count_matches && structures_equal(estimate.b_hat, truth);
}

}  // namespace blockveil
