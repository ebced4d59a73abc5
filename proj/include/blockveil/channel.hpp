// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string>

#include "blockveil/linalg.hpp"
#include "blockveil/protocol.hpp"
#include "blockveil/rng.hpp"

namespace blockveil {

/// Public channel A (m x n) with its cached products M = A^T A and
/// P = M .* M. Immutable once built.
class ChannelMatrix {
 public:
  /// Wraps an arbitrary matrix. The generators below enforce m < n; this
  /// entry point also accepts m >= n for diagnostics.
  static ChannelMatrix from_matrix(Matrix a, std::string generator = "explicit",
                                   std::uint64_t seed = 0);

  int rows() const { return static_cast<int>(a_.rows()); }
  int cols() const { return static_cast<int>(a_.cols()); }
  const Matrix& a() const { return a_; }
  const Matrix& gram() const { return gram_; }
  const Matrix& gram_squared() const { return gram_sq_; }
  const std::string& generator() const { return generator_; }
  std::uint64_t seed() const { return seed_; }

 private:
  ChannelMatrix(Matrix a, std::string generator, std::uint64_t seed);

  Matrix a_;
  Matrix gram_;
  Matrix gram_sq_;
  std::string generator_;
  std::uint64_t seed_;
};

/// i.i.d. N(0, 1/m) entries.
ChannelMatrix gen_gaussian_channel(int m, int n, Seed seed);

/// Columns i.i.d. uniform on the unit sphere of R^m.
ChannelMatrix gen_isotropic_channel(int m, int n, Seed seed);

/// Fourth-order matrices of the z-covariance:
///   E_B(i,j) = sum_k sum_{k' != k, same block} m_ik m_ik' m_jk m_jk'
///   F(i,j)   = sum_k sum_{k' != k}             m_ik m_ik' m_jk m_jk'
///   G(i,j)   = sum_k sum_{k' != k}             a_ki a_kj a_k'i a_k'j
/// and the diagonal centering constant gamma.
struct FourthOrderMatrices {
  Matrix e_b;
  Matrix f;
  Matrix g;
  double gamma = 0.0;
};

/// Closed forms, O(n^3):
///   E_B = sum_q T_q .* T_q - P^2,  T_q = M_q M_q^T (columns of block q)
///   F   = (M^2) .* (M^2) - P^2
///   G   = P - (A .* A)^T (A .* A)
FourthOrderMatrices fourth_order_matrices(const ChannelMatrix& ch, const BlockStructure& bs);

Matrix fourth_order_f(const ChannelMatrix& ch);
Matrix fourth_order_g(const ChannelMatrix& ch);

/// Literal quadruple-sum evaluation. Test oracle only; refuses n > 64.
FourthOrderMatrices fourth_order_naive(const ChannelMatrix& ch, const BlockStructure& bs);

/// Expected diagonal of E_B for unit-norm isotropic columns:
///   gamma = 2(d-1)/m + (n-2)(d-1)/m^2.
double attack_gamma(int n, int m, int d);

/// The variant printed alongside the coherence bounds,
///   2(d-1)/m^2 + (n-2)(d-1)/m^4. Reported only.
double coherence_gamma(int n, int m, int d);

/// One inequality of the (mu, nu)-coherence family.
struct CoherenceBound {
  char label;               ///< 'a' .. 'g'
  std::string description;  ///< the quantity being bounded
  double lhs;               ///< observed value of that quantity
  double mu_required;       ///< smallest mu making the bound hold (NaN for 'g')
  bool satisfied;           ///< at the supplied (mu, nu)
};

struct CoherenceReport {
  std::array<CoherenceBound, 7> bounds;
  double nu_required;       ///< 1 / lambda_min(P); +inf when P is singular
  bool p_singular;
  double gamma;             ///< attack_gamma used for bound (d)
  double gamma_alt;         ///< coherence_gamma, for reference
  double e_b_deviation_alt; ///< ||E_B - gamma_alt I||_2
  /// Smallest mu meeting every one of bounds (a)-(f).
  double mu_required() const;
};

/// Evaluates bounds (a)-(g):
///   (a) ||A||_2        <= sqrt(n/m) mu
///   (b) ||A||_max      <= sqrt(n log n / m) mu
///   (c) ||M||_max      <= log(n) mu^2
///   (d) ||E_B - gI||_2 <= max(1/m^2, n/m^4) d sqrt(n) log(n) mu^8
///   (e) ||F||_2        <= (n/m)^2 log^2(n) mu^8
///   (f) ||G||_2        <= (n/m) log(n) mu^4
///   (g) lambda_min(P)  >= 1/nu
/// P counts as singular when lambda_min(P) < 1e-10 lambda_max(P).
CoherenceReport coherence_check(const ChannelMatrix& ch, const BlockStructure& bs, double mu,
                                double nu);

}  // namespace blockveil
