#include <cmath>
#include <numeric>

#include "doctest.h"

#include "oracles.hpp"

#include "blockveil/eavesdrop.hpp"

using namespace blockveil;

namespace {

Matrix symmetric_noise(int n, double norm, Seed seed) {
  Rng rng(seed);
  Matrix e(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) e(i, j) = e(j, i) = rng.normal();
  return e * (norm / symmetric_spectral_norm(e));
}

}  // namespace

TEST_CASE("analytic z moments equal the exact mixture moments") {
  for (int t = 0; t < 8; ++t) {
    const int r = 2 + t % 2;
    const int n = 4 * r, m = n / 2;
    const double p = 0.1 + 0.1 * t, sigma2 = 0.05 * t;
    auto ch = gen_gaussian_channel(m, n, Seed(t));
    auto bs = random_block_structure(n, r, Seed(50 + t));
    auto exact = oracle::z_moments_gaussian(ch, bs, p, sigma2);
    auto model = analytic_covariance(ch, bs, p, sigma2);
    CHECK(relative_frobenius_error(model.sigma_z, exact.cov) < 1e-12);
    CHECK((mean_z(ch, p, sigma2) - exact.mean).norm() < 1e-12 * exact.mean.norm());
    CHECK((model.structure_term + model.fourth_order_term + model.c - model.sigma_z).norm() < 1e-12);
  }
}

TEST_CASE("the published covariance form is measurably off") {
  auto ch = gen_gaussian_channel(4, 8, Seed(7));
  auto bs = random_block_structure(8, 2, Seed(8));
  auto exact = oracle::z_moments_gaussian(ch, bs, 0.3, 0.1);
  auto published = analytic_covariance(ch, bs, 0.3, 0.1, Constellation::kGaussian, MomentFormula::kPublished);
  CHECK(relative_frobenius_error(published.sigma_z, exact.cov) > 0.01);
  CHECK(e_b_coefficient(0.3) == doctest::Approx(0.42));
  CHECK(e_b_coefficient(0.3, MomentFormula::kPublished) == doctest::Approx(0.6));
}

TEST_CASE("noise-only covariance") {
  auto ch = gen_gaussian_channel(4, 8, Seed(2));
  auto bs = BlockStructure::contiguous(8, 2);
  auto model = analytic_covariance(ch, bs, 0.0, 0.5);
  const Matrix& m = ch.gram();
  // u ~ N(0, sigma2 M): Cov(u_i^2, u_j^2) = 2 sigma2^2 m_ij^2
  CHECK((model.sigma_z - 2 * 0.25 * m.cwiseProduct(m)).norm() < 1e-12);
}

TEST_CASE("bpsk covariance against Monte Carlo") {
  const int n = 8, m = 4, r = 2;
  const double p = 0.3, sigma2 = 0.1;
  auto ch = gen_gaussian_channel(m, n, Seed(21));
  auto bs = random_block_structure(n, r, Seed(22));
  TransmissionConfig tc{{p, Constellation::kBpsk}, sigma2, 200000};
  Matrix y = snapshots(ch, bs, tc, Seed(23));
  Matrix z = hadamard_square_transform(ch, y);
  auto model = analytic_covariance(ch, bs, p, sigma2, Constellation::kBpsk);
  Matrix emp = empirical_covariance(z, mean_z(ch, p, sigma2));
  CHECK(relative_frobenius_error(emp, model.sigma_z) < 0.05);
  CHECK((z.rowwise().mean() - mean_z(ch, p, sigma2)).norm() < 0.02 * mean_z(ch, p, sigma2).norm());
}

TEST_CASE("covariance accumulator matches the batch estimate") {
  auto ch = gen_gaussian_channel(6, 12, Seed(1));
  auto bs = BlockStructure::contiguous(12, 3);
  Matrix y = snapshots(ch, bs, {{0.3, Constellation::kGaussian}, 0.1, 900}, Seed(2));
  Matrix z = hadamard_square_transform(ch, y);
  Vector c = mean_z(ch, 0.3, 0.1);
  CovarianceAccumulator acc(c);
  acc.add(z.leftCols(400));
  acc.add(z.middleCols(400, 17));
  acc.add(z.rightCols(483));
  CHECK(acc.count() == 900);
  CHECK((acc.covariance() - empirical_covariance(z, c)).norm() < 1e-10 * acc.covariance().norm());
}

TEST_CASE("debiasing inverts the model exactly when E_B = gamma I") {
  for (auto formula : {MomentFormula::kExact, MomentFormula::kPublished}) {
    const int n = 24, m = 16, r = 4;
    const double p = 0.2, sigma2 = 0.3;
    auto ch = gen_gaussian_channel(m, n, Seed(31));
    auto bs = random_block_structure(n, r, Seed(32));
    DebiasParams dp{p, n / r, sigma2, Constellation::kGaussian, formula};
    Debiaser deb(ch, dp);
    const Matrix& pm = ch.gram_squared();
    Matrix b = indicator_matrix(bs);
    Matrix sigma = p * (1 - p) * pm * b * pm + deb.offset();
    CHECK((deb.apply(sigma) - b).cwiseAbs().maxCoeff() < 1e-8);
    Matrix expected_offset = correction_matrix(ch, p, sigma2, Constellation::kGaussian, formula);
    expected_offset.diagonal().array() += e_b_coefficient(p, formula) * attack_gamma(n, m, n / r);
    CHECK((deb.offset() - expected_offset).norm() < 1e-12 * expected_offset.norm());
    CHECK((debias(sigma, ch, dp) - deb.apply(sigma)).norm() < 1e-12);
  }
}

TEST_CASE("debiasing refuses a singular P") {
  // Two identical columns make P singular.
  Matrix a(2, 3);
  a << 1, 1, 0, 0, 0, 1;
  auto ch = ChannelMatrix::from_matrix(a);
  CHECK_THROWS_AS(Debiaser(ch, {0.3, 1, 0.0}), IllConditionedError);
}

TEST_CASE("greedy clustering recovers the blocks of a perturbed indicator") {
  for (int t = 0; t < 20; ++t) {
    const int n = 48, r = 6, d = n / r;
    auto bs = random_block_structure(n, r, Seed(400 + t));
    Matrix b = indicator_matrix(bs) + symmetric_noise(n, 0.25 * std::sqrt(2.0 * d) / 8, Seed(500 + t));
    auto lead = leading_eigenvectors(b, r);
    CHECK(lead.u.cols() == r);
    CHECK((lead.u.transpose() * lead.u - Matrix::Identity(r, r)).norm() < 1e-10);
    auto found = greedy_kmeans(lead.u, d);
    CHECK(found.block_count() == r);
    CHECK(structures_equal(found, bs));
  }
}

TEST_CASE("structure equality ignores label names") {
  auto a = BlockStructure::from_labels({0, 0, 1, 1, 2, 2});
  auto b = BlockStructure::from_labels({2, 2, 0, 0, 1, 1});
  auto c = BlockStructure::from_labels({0, 1, 0, 1, 2, 2});
  CHECK(structures_equal(a, b));
  CHECK_FALSE(structures_equal(a, c));
  CHECK_FALSE(structures_equal(a, BlockStructure::from_labels({0, 0, 0, 1, 1, 1})));
}

TEST_CASE("leading eigenvectors are sign-normalised and ordered") {
  Matrix s = Matrix::Zero(4, 4);
  s.diagonal() << 1, 5, 3, -7;
  auto lead = leading_eigenvectors(s, 2);
  CHECK(lead.eigenvalues(0) == doctest::Approx(5));
  CHECK(lead.eigenvalues(1) == doctest::Approx(3));
  CHECK(lead.u(1, 0) == doctest::Approx(1));
  CHECK(lead.u(2, 1) == doctest::Approx(1));
  CHECK(lead.gap == doctest::Approx(2));
  CHECK_THROWS(leading_eigenvectors(s, 5));
}

TEST_CASE("moment attack succeeds with many high-SNR snapshots") {
  // E_B ~ gamma I only holds once m is a sizeable fraction of n; at this
  // size the exact covariance leads to the true structure on most
  // instances, and the empirical pipeline should then follow.
  const int n = 64, m = 48, r = 4;
  const double p = p_for_beta(m, n, 3.0);
  const double sigma2 = sigma2_for_snr_db(p, n, m, 40);
  int checked = 0;
  for (int t = 0; t < 3; ++t) {
    auto ch = gen_gaussian_channel(m, n, Seed(61).derive(t));
    auto bs = random_block_structure(n, r, Seed(62).derive(t));
    Debiaser deb(ch, {p, n / r, sigma2});
    const Matrix population = deb.apply(analytic_covariance(ch, bs, p, sigma2).sigma_z);
    if (!structures_equal(greedy_kmeans(leading_eigenvectors(population, r).u, n / r), bs)) continue;
    ++checked;
    Matrix y = snapshots(ch, bs, {{p, Constellation::kGaussian}, sigma2, 40000}, Seed(63).derive(t));
    for (auto centering : {Centering::kModelMean, Centering::kSampleMean}) {
      auto est = eavesdrop(y, ch, {p, r, sigma2, Constellation::kGaussian, centering});
      CHECK(est.cluster_count_matches);
      CHECK(attack_succeeded(est, bs));
      CHECK(est.u_tilde.cols() == r);
    }
    // A handful of snapshots cannot reveal the structure.
    Matrix few = snapshots(ch, bs, {{p, Constellation::kGaussian}, sigma2, 2}, Seed(64));
    CHECK_FALSE(attack_succeeded(eavesdrop(few, ch, {p, r, sigma2}), bs));
  }
  CHECK(checked >= 2);
}
