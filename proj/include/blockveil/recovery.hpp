// SPDX-License-Identifier: Apache-2.0
//
// Decoders for y = A x + w: Eve's structure-blind basis pursuit, Bob's
// block basis pursuit and a block-OMP greedy solver, plus the success and
// bit-error metrics used by the experiments.
#pragma once

#include <optional>

#include "blockveil/channel.hpp"
#include "blockveil/linalg.hpp"
#include "blockveil/protocol.hpp"

namespace blockveil {

/// Residual bound used for noiseless problems.
inline constexpr double kNoiselessEpsilon = 1e-6;

struct SolverOptions {
  double epsilon = kNoiselessEpsilon;  ///< ||y - A x||_2 <= epsilon
  int max_iterations = 2000;
  double rho = 1.0;           ///< initial ADMM penalty
  double relaxation = 1.5;    ///< over-relaxation factor in (0, 2)
  bool adaptive_rho = true;   ///< residual balancing
  double feas_tol = 1e-8;     ///< slack on the residual bound
  double change_tol = 1e-8;   ///< relative iterate change at convergence
  double success_tol = 1e-3;  ///< relative l2 error counted as exact recovery

  void validate() const;
};

/// epsilon = sigma sqrt(m + 2 sqrt(m log m)), a high-probability bound on
/// ||w||_2 for w ~ N(0, sigma2 I_m); kNoiselessEpsilon when sigma2 == 0.
double noise_epsilon(double sigma2, int m);

struct RecoverySolution {
  Vector x_hat;
  double residual = 0.0;      ///< ||y - A x_hat||_2
  int iterations = 0;
  bool converged = false;
  bool rank_deficient = false;  ///< greedy solver fell back to a pseudoinverse
  std::optional<double> rel_error;

  /// Records ||x_hat - x|| / ||x|| (or ||x_hat|| when x = 0).
  void attach_truth(const Vector& x_true);
};

/// min ||x||_1  s.t. ||y - A x||_2 <= epsilon.
RecoverySolution basis_pursuit(const ChannelMatrix& ch, const Vector& y, const SolverOptions& opts);

/// min sum_q ||x[q]||_2  s.t. ||y - A x||_2 <= epsilon.
RecoverySolution block_basis_pursuit(const ChannelMatrix& ch, const Vector& y,
                                     const BlockStructure& bs, const SolverOptions& opts);

/// Block orthogonal matching pursuit: picks the block with the largest
/// ||(A^T r)[q]||_2, refits by least squares on all picked blocks and
/// stops after k_max blocks or once ||r||_2 <= epsilon.
RecoverySolution block_greedy(const ChannelMatrix& ch, const Vector& y, const BlockStructure& bs,
                              int k_max, const SolverOptions& opts);

double relative_error(const Vector& x_hat, const Vector& x_true);

/// ||x_hat - x|| / ||x|| <= tol; for x = 0, ||x_hat|| <= tol.
bool recovery_success(const RecoverySolution& sol, const Vector& x_true, double success_tol);

/// Hard decision for the {-1, 0, +1} alphabet: sign(v) when |v| > 1/2.
double bpsk_decision(double v);

/// Fraction of active entries (x_i != 0) whose hard decision differs
/// from x_i. Zero when x has no active entry.
double ber_bpsk(const Vector& x_hat, const Vector& x_true);

}  // namespace blockveil
