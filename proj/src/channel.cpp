// SPDX-License-Identifier: Apache-2.0
#include "blockveil/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace blockveil {

namespace {

void check_dimensions(int m, int n) {
  if (m <= 0 || n <= 0 || m >= n)
    throw std::invalid_argument("channel dimensions must satisfy 0 < m < n (got m=" +
                                std::to_string(m) + ", n=" + std::to_string(n) + ")");
}

void check_structure(const ChannelMatrix& ch, const BlockStructure& bs) {
  if (bs.size() != ch.cols())
    throw std::invalid_argument("block structure covers " + std::to_string(bs.size()) +
                                " indices but channel has " + std::to_string(ch.cols()) +
                                " columns");
}

}  // namespace

ChannelMatrix::ChannelMatrix(Matrix a, std::string generator, std::uint64_t seed)
    : a_(std::move(a)), generator_(std::move(generator)), seed_(seed) {
  gram_ = Matrix(a_.cols(), a_.cols());
  gram_.setZero();
  gram_.selfadjointView<Eigen::Lower>().rankUpdate(a_.transpose());
  gram_ = gram_.selfadjointView<Eigen::Lower>();
  gram_sq_ = gram_.cwiseProduct(gram_);
}

ChannelMatrix ChannelMatrix::from_matrix(Matrix a, std::string generator, std::uint64_t seed) {
  if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("empty channel matrix");
  return ChannelMatrix(std::move(a), std::move(generator), seed);
}

ChannelMatrix gen_gaussian_channel(int m, int n, Seed seed) {
  check_dimensions(m, n);
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  Matrix a(m, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) a(i, j) = scale * rng.normal();
  return ChannelMatrix::from_matrix(std::move(a), "gaussian", seed.value());
}

ChannelMatrix gen_isotropic_channel(int m, int n, Seed seed) {
  check_dimensions(m, n);
  Rng rng(seed);
  Matrix a(m, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) a(i, j) = rng.normal();
    a.col(j) /= a.col(j).norm();
  }
  return ChannelMatrix::from_matrix(std::move(a), "isotropic", seed.value());
}

Matrix fourth_order_f(const ChannelMatrix& ch) {
  const Matrix& p = ch.gram_squared();
  const Matrix m2 = ch.gram() * ch.gram();
  return symmetrize(m2.cwiseProduct(m2) - p * p);
}

Matrix fourth_order_g(const ChannelMatrix& ch) {
  const Matrix aa = ch.a().cwiseProduct(ch.a());
  return symmetrize(ch.gram_squared() - aa.transpose() * aa);
}

FourthOrderMatrices fourth_order_matrices(const ChannelMatrix& ch, const BlockStructure& bs) {
  check_structure(ch, bs);
  const Matrix& m = ch.gram();
  const Matrix& p = ch.gram_squared();
  const Eigen::Index n = m.rows();

  FourthOrderMatrices out;
  out.e_b = Matrix::Zero(n, n);
  for (const auto& members : bs.blocks()) {
    Matrix mq(n, static_cast<Eigen::Index>(members.size()));
    for (std::size_t c = 0; c < members.size(); ++c)
      mq.col(static_cast<Eigen::Index>(c)) = m.col(members[c]);
    Matrix t = Matrix::Zero(n, n);
    t.selfadjointView<Eigen::Lower>().rankUpdate(mq);
    t = t.selfadjointView<Eigen::Lower>();
    out.e_b += t.cwiseProduct(t);
  }
  out.e_b -= p * p;
  out.e_b = symmetrize(out.e_b);
  out.f = fourth_order_f(ch);
  out.g = fourth_order_g(ch);
  out.gamma = bs.equal_sized() ? attack_gamma(ch.cols(), ch.rows(), bs.block_length())
                               : std::numeric_limits<double>::quiet_NaN();
  return out;
}

FourthOrderMatrices fourth_order_naive(const ChannelMatrix& ch, const BlockStructure& bs) {
  check_structure(ch, bs);
  const int n = ch.cols();
  const int rows = ch.rows();
  if (n > 64) throw std::invalid_argument("fourth_order_naive is an O(n^4) oracle; n must be <= 64");
  const Matrix& m = ch.gram();
  const Matrix& a = ch.a();

  FourthOrderMatrices out;
  out.e_b = Matrix::Zero(n, n);
  out.f = Matrix::Zero(n, n);
  out.g = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double e = 0.0, f = 0.0, g = 0.0;
      for (int k = 0; k < n; ++k) {
        for (int kp = 0; kp < n; ++kp) {
          if (kp == k) continue;
          const double term = m(i, k) * m(i, kp) * m(j, k) * m(j, kp);
          f += term;
          if (bs.label(k) == bs.label(kp)) e += term;
        }
      }
      for (int k = 0; k < rows; ++k)
        for (int kp = 0; kp < rows; ++kp)
          if (kp != k) g += a(k, i) * a(k, j) * a(kp, i) * a(kp, j);
      out.e_b(i, j) = e;
      out.f(i, j) = f;
      out.g(i, j) = g;
    }
  }
  out.gamma = bs.equal_sized() ? attack_gamma(n, rows, bs.block_length())
                               : std::numeric_limits<double>::quiet_NaN();
  return out;
}

double attack_gamma(int n, int m, int d) {
  const double dm1 = d - 1.0;
  const double md = m;
  return 2.0 * dm1 / md + (n - 2.0) * dm1 / (md * md);
}

double coherence_gamma(int n, int m, int d) {
  const double dm1 = d - 1.0;
  const double m2 = static_cast<double>(m) * m;
  return 2.0 * dm1 / m2 + (n - 2.0) * dm1 / (m2 * m2);
}

double CoherenceReport::mu_required() const {
  double mu = 0.0;
  for (const auto& b : bounds)
    if (!std::isnan(b.mu_required)) mu = std::max(mu, b.mu_required);
  return mu;
}

CoherenceReport coherence_check(const ChannelMatrix& ch, const BlockStructure& bs, double mu,
                                double nu) {
  check_structure(ch, bs);
  const double n = ch.cols();
  const double m = ch.rows();
  const double logn = std::log(n);
  const int d = bs.equal_sized() ? bs.block_length()
                                 : static_cast<int>(std::max_element(bs.blocks().begin(), bs.blocks().end(),
                                                                     [](const auto& x, const auto& y) {
                                                                       return x.size() < y.size();
                                                                     })->size());
  const auto fo = fourth_order_matrices(ch, bs);
  const double gamma = attack_gamma(ch.cols(), ch.rows(), d);
  const double gamma_alt = coherence_gamma(ch.cols(), ch.rows(), d);
  const Matrix eye = Matrix::Identity(ch.cols(), ch.cols());

  auto root = [](double ratio, double power) {
    return ratio <= 0.0 ? 0.0 : std::pow(ratio, 1.0 / power);
  };

  CoherenceReport rep{};
  const double fourth_scale = std::max(1.0 / (m * m), n / (m * m * m * m)) * d * std::sqrt(n) * logn;

  const double norm_a = spectral_norm(ch.a());
  const double max_a = max_abs(ch.a());
  const double max_m = max_abs(ch.gram());
  const double dev_e = symmetric_spectral_norm(fo.e_b - gamma * eye);
  const double norm_f = symmetric_spectral_norm(fo.f);
  const double norm_g = symmetric_spectral_norm(fo.g);

  struct Spec {
    char label;
    const char* what;
    double lhs;
    double scale;  // rhs = scale * mu^power
    double power;
  };
  const Spec specs[6] = {
      {'a', "||A||_2", norm_a, std::sqrt(n / m), 1.0},
      {'b', "||A||_max", max_a, std::sqrt(n * logn / m), 1.0},
      {'c', "||M||_max", max_m, logn, 2.0},
      {'d', "||E_B - gamma I||_2", dev_e, fourth_scale, 8.0},
      {'e', "||F||_2", norm_f, (n / m) * (n / m) * logn * logn, 8.0},
      {'f', "||G||_2", norm_g, (n / m) * logn, 4.0},
  };
  for (int k = 0; k < 6; ++k) {
    const auto& s = specs[k];
    rep.bounds[k] = {s.label, s.what, s.lhs, root(s.lhs / s.scale, s.power),
                     s.lhs <= s.scale * std::pow(mu, s.power)};
  }

  const auto range = symmetric_eigen_range(ch.gram_squared());
  rep.p_singular = !(range.min >= 1e-10 * range.max) || range.max <= 0.0;
  rep.nu_required = rep.p_singular ? std::numeric_limits<double>::infinity() : 1.0 / range.min;
  rep.bounds[6] = {'g', "lambda_min(P)", range.min, std::numeric_limits<double>::quiet_NaN(),
                   !rep.p_singular && range.min >= 1.0 / nu};
  rep.gamma = gamma;
  rep.gamma_alt = gamma_alt;
  rep.e_b_deviation_alt = symmetric_spectral_norm(fo.e_b - gamma_alt * eye);
  return rep;
}

}  // namespace blockveil
