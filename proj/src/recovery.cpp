// SPDX-License-Identifier: Apache-2.0
#include "blockveil/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace blockveil {

void SolverOptions::validate() const {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be > 0");
  if (!(relaxation > 0.0 && relaxation < 2.0))
    throw std::invalid_argument("relaxation must lie in (0, 2)");
  if (!(feas_tol > 0.0 && change_tol > 0.0 && success_tol > 0.0))
    throw std::invalid_argument("tolerances must be > 0");
}

double noise_epsilon(double sigma2, int m) {
  if (sigma2 <= 0.0) return kNoiselessEpsilon;
  const double mm = m;
  return std::sqrt(sigma2) * std::sqrt(mm + 2.0 * std::sqrt(mm * std::log(mm)));
}

double relative_error(const Vector& x_hat, const Vector& x_true) {
  const double norm = x_true.norm();
  const double diff = (x_hat - x_true).norm();
  return norm > 0.0 ? diff / norm : diff;
}

void RecoverySolution::attach_truth(const Vector& x_true) { rel_error = relative_error(x_hat, x_true); }

namespace {

void check_inputs(const ChannelMatrix& ch, const Vector& y, const SolverOptions& opts) {
  opts.validate();
  if (y.size() != ch.rows())
    throw std::invalid_argument("observation length " + std::to_string(y.size()) +
                                " does not match channel height " + std::to_string(ch.rows()));
}

// ADMM approaches the residual ball from outside, so its iterates sit a
// hair beyond epsilon. Moves z along the least-squares correction on its
// own support just far enough to land inside the ball. The step is of the
// order of the overshoot, so the objective is unchanged to that order.
bool restore_feasibility(const Matrix& a, const Vector& y, Vector& z, double target) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (z(i) != 0.0) support.push_back(i);
  if (support.empty()) return false;
  Matrix sub(a.rows(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t c = 0; c < support.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = a.col(support[c]);
  const Vector r = y - a * z;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(sub);
  const Vector c = cod.solve(r);
  const double qq = (sub * c).squaredNorm();
  const double excess = r.squaredNorm() - target * target;
  if (excess <= 0.0) return true;
  if (qq <= 0.0 || excess > qq) return false;
  const double t = 1.0 - std::sqrt(1.0 - excess / qq);
  for (std::size_t k = 0; k < support.size(); ++k) z(support[k]) += t * c(static_cast<Eigen::Index>(k));
  return true;
}

// Scaled ADMM on
//   min f(z) + I{||v - y|| <= eps}(v)  s.t.  x = z, A x = v.
// The x-update solves (I + A^T A) x = rhs through the m x m factor of
// I + A A^T; since A x = K^{-1} A rhs it also comes out of that solve.
// Both constraint blocks share one penalty, so rescaling rho never
// requires refactoring.
template <typename Prox>
RecoverySolution admm_constrained(const ChannelMatrix& ch, const Vector& y, const SolverOptions& opts,
                                  Prox&& prox) {
  const Matrix& a = ch.a();
  const Eigen::Index n = a.cols();
  const Eigen::Index m = a.rows();

  Matrix k = Matrix::Identity(m, m);
  k.selfadjointView<Eigen::Lower>().rankUpdate(a);
  Eigen::LLT<Matrix> chol(k);

  Vector x = Vector::Zero(n), z = Vector::Zero(n), u = Vector::Zero(n);
  Vector v = y, w = Vector::Zero(m);
  Vector z_old(n), v_old(m), rhs(n), ax(m), x_rel(n), ax_rel(m);
  double rho = opts.rho;
  const double alpha = opts.relaxation;

  RecoverySolution sol;
  int next_restore = 0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    rhs.noalias() = z - u;
    rhs.noalias() += a.transpose() * (v - w);
    ax.noalias() = a * rhs;
    ax = chol.solve(ax);
    x.noalias() = rhs - a.transpose() * ax;

    x_rel = alpha * x + (1.0 - alpha) * z;
    ax_rel = alpha * ax + (1.0 - alpha) * v;

    z_old = z;
    v_old = v;
    z = x_rel + u;
    prox(z, 1.0 / rho);

    v = ax_rel + w;
    Vector dv = v - y;
    const double dn = dv.norm();
    if (dn > opts.epsilon) v = y + (opts.epsilon / dn) * dv;

    u += x_rel - z;
    w += ax_rel - v;

    sol.iterations = it;
    const double change = (z - z_old).norm();
    if (change <= opts.change_tol * std::max(1.0, z.norm())) {
      if ((y - a * z).norm() <= opts.epsilon + opts.feas_tol) {
        sol.converged = true;
        break;
      }
      if (it >= next_restore) {
        next_restore = it + 25;
        Vector polished = z;
        if (restore_feasibility(a, y, polished, opts.epsilon + 0.5 * opts.feas_tol) &&
            (y - a * polished).norm() <= opts.epsilon + opts.feas_tol) {
          z = polished;
          sol.converged = true;
          break;
        }
      }
    }

    if (opts.adaptive_rho && it % 10 == 0) {
      const double r_pri = std::sqrt((x - z).squaredNorm() + (ax - v).squaredNorm());
      const double r_dual = rho * (z - z_old + a.transpose() * (v - v_old)).norm();
      if (r_pri > 10.0 * r_dual) {
        rho *= 2.0;
        u *= 0.5;
        w *= 0.5;
      } else if (r_dual > 10.0 * r_pri) {
        rho *= 0.5;
        u *= 2.0;
        w *= 2.0;
      }
    }
  }
  sol.x_hat = z;
  sol.residual = (y - a * z).norm();
  return sol;
}

}  // namespace

RecoverySolution basis_pursuit(const ChannelMatrix& ch, const Vector& y, const SolverOptions& opts) {
  check_inputs(ch, y, opts);
  return admm_constrained(ch, y, opts, [](Vector& z, double kappa) {
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double t = std::abs(z(i)) - kappa;
      z(i) = t > 0.0 ? std::copysign(t, z(i)) : 0.0;
    }
  });
}

RecoverySolution block_basis_pursuit(const ChannelMatrix& ch, const Vector& y,
                                     const BlockStructure& bs, const SolverOptions& opts) {
  check_inputs(ch, y, opts);
  if (bs.size() != ch.cols()) throw std::invalid_argument("block structure does not match channel width");
  return admm_constrained(ch, y, opts, [&bs](Vector& z, double kappa) {
    for (const auto& members : bs.blocks()) {
      double sq = 0.0;
      for (int i : members) sq += z(i) * z(i);
      const double norm = std::sqrt(sq);
      const double scale = norm > kappa ? 1.0 - kappa / norm : 0.0;
      for (int i : members) z(i) *= scale;
    }
  });
}

RecoverySolution block_greedy(const ChannelMatrix& ch, const Vector& y, const BlockStructure& bs,
                              int k_max, const SolverOptions& opts) {
  check_inputs(ch, y, opts);
  if (bs.size() != ch.cols()) throw std::invalid_argument("block structure does not match channel width");
  if (k_max < 0 || k_max > bs.block_count())
    throw std::invalid_argument("block budget must lie in [0, r]");
  const Matrix& a = ch.a();

  RecoverySolution sol;
  sol.x_hat = Vector::Zero(ch.cols());
  Vector resid = y;
  std::vector<bool> picked(static_cast<std::size_t>(bs.block_count()), false);
  std::vector<int> support;

  while (resid.norm() > opts.epsilon && sol.iterations < k_max) {
    const Vector corr = a.transpose() * resid;
    int best = -1;
    double best_score = -1.0;
    for (int q = 0; q < bs.block_count(); ++q) {
      if (picked[static_cast<std::size_t>(q)]) continue;
      double sq = 0.0;
      for (int i : bs.block(q)) sq += corr(i) * corr(i);
      if (sq > best_score) {
        best_score = sq;
        best = q;
      }
    }
    picked[static_cast<std::size_t>(best)] = true;
    support.insert(support.end(), bs.block(best).begin(), bs.block(best).end());
    ++sol.iterations;

    Matrix sub(a.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t c = 0; c < support.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = a.col(support[c]);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(sub);
    if (cod.rank() < sub.cols()) sol.rank_deficient = true;
    const Vector coef = cod.solve(y);

    sol.x_hat.setZero();
    for (std::size_t c = 0; c < support.size(); ++c) sol.x_hat(support[c]) = coef(static_cast<Eigen::Index>(c));
    resid = y - sub * coef;
  }
  sol.residual = resid.norm();
  sol.converged = sol.residual <= opts.epsilon + opts.feas_tol;
  return sol;
}

bool recovery_success(const RecoverySolution& sol, const Vector& x_true, double success_tol) {
  if (sol.x_hat.size() != x_true.size()) throw std::invalid_argument("length mismatch");
  return relative_error(sol.x_hat, x_true) <= success_tol;
}

double bpsk_decision(double v) { return std::abs(v) > 0.5 ? (v > 0.0 ? 1.0 : -1.0) : 0.0; }

double ber_bpsk(const Vector& x_hat, const Vector& x_true) {
  if (x_hat.size() != x_true.size()) throw std::invalid_argument("length mismatch");
  int active = 0, errors = 0;
  for (Eigen::Index i = 0; i < x_true.size(); ++i) {
    if (x_true(i) == 0.0) continue;
    ++active;
    if (bpsk_decision(x_hat(i)) != x_true(i)) ++errors;
  }
  return active == 0 ? 0.0 : static_cast<double>(errors) / active;
}

}  // namespace blockveil
