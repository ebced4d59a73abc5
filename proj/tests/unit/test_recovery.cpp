#include <cmath>

#include "doctest.h"

#include "blockveil/recovery.hpp"

using namespace blockveil;

namespace {

double group_norm(const Vector& x, const BlockStructure& bs) {
  double s = 0;
  for (const auto& blk : bs.blocks()) {
    double q = 0;
    for (int i : blk) q += x(i) * x(i);
    s += std::sqrt(q);
  }
  return s;
}

}  // namespace

TEST_CASE("basis pursuit: feasibility and l1 optimality") {
  // Dense instances past the phase transition may stop at the iteration
  // cap; the properties are checked on converged solutions.
  SolverOptions opts;
  int converged = 0;
  for (int t = 0; t < 10; ++t) {
    auto ch = gen_gaussian_channel(30, 60, Seed(t));
    auto bs = random_block_structure(60, 12, Seed(100 + t));
    Vector x = encode(bs, {0.15, Constellation::kGaussian}, Seed(200 + t));
    Vector y = ch.a() * x;
    auto sol = basis_pursuit(ch, y, opts);
    converged += sol.converged;
    if (!sol.converged) continue;
    CHECK(sol.residual <= opts.epsilon * (1 + 1e-6) + opts.feas_tol);
    CHECK(sol.x_hat.lpNorm<1>() <= x.lpNorm<1>() * (1 + 1e-3) + 1e-6);
    CHECK((ch.a() * sol.x_hat - y).norm() == doctest::Approx(sol.residual).epsilon(1e-9));
  }
  CHECK(converged >= 7);
}

TEST_CASE("block basis pursuit: feasibility and group-norm optimality") {
  SolverOptions opts;
  for (int t = 0; t < 10; ++t) {
    auto ch = gen_gaussian_channel(30, 60, Seed(10 + t));
    auto bs = random_block_structure(60, 12, Seed(110 + t));
    Vector x = encode(bs, {0.2, Constellation::kGaussian}, Seed(210 + t));
    Vector y = ch.a() * x;
    auto sol = block_basis_pursuit(ch, y, bs, opts);
    REQUIRE(sol.converged);
    CHECK(sol.residual <= opts.epsilon * (1 + 1e-6) + opts.feas_tol);
    CHECK(group_norm(sol.x_hat, bs) <= group_norm(x, bs) * (1 + 1e-3) + 1e-6);
  }
}

TEST_CASE("one-sparse signals are recovered and match least squares on the support") {
  auto ch = gen_gaussian_channel(20, 50, Seed(5));
  for (int j : {0, 17, 49}) {
    Vector x = Vector::Zero(50);
    x(j) = -1.7;
    auto sol = basis_pursuit(ch, ch.a() * x, SolverOptions{});
    CHECK(recovery_success(sol, x, 1e-3));
    // Least squares on the true support, noisy observation.
    Rng rng{Seed(static_cast<std::uint64_t>(j))};
    Vector w(20);
    for (int i = 0; i < 20; ++i) w(i) = 0.01 * rng.normal();
    Vector y = ch.a() * x + w;
    const Vector col = ch.a().col(j);
    const double ls = col.dot(y) / col.squaredNorm();
    SolverOptions noisy;
    noisy.epsilon = noise_epsilon(1e-4, 20);
    auto greedy = block_greedy(ch, y, BlockStructure::contiguous(50, 50), 1, noisy);
    CHECK(greedy.x_hat(j) == doctest::Approx(ls).epsilon(1e-10));
    CHECK(greedy.x_hat.cwiseAbs().sum() == doctest::Approx(std::abs(ls)).epsilon(1e-10));
  }
}

TEST_CASE("a single active block is recovered and matches least squares on its support") {
  // m = 2d alone does not make the true block the group-norm minimiser
  // when there are many competing blocks; 4d does at this size.
  const int n = 120, r = 12, d = 10, m = 4 * d;
  for (int t = 0; t < 10; ++t) {
    auto ch = gen_gaussian_channel(m, n, Seed(900 + t));
    auto bs = random_block_structure(n, r, Seed(1000 + t));
    const auto& support = bs.block(t % r);
    Vector x = Vector::Zero(n);
    Rng rng(Seed(1100 + t));
    for (int i : support) x(i) = rng.normal();
    const Vector y = ch.a() * x;
    auto sol = block_basis_pursuit(ch, y, bs, {});
    Matrix as(m, d);
    for (int c = 0; c < d; ++c) as.col(c) = ch.a().col(support[c]);
    const Vector ls = as.colPivHouseholderQr().solve(y);
    Vector oracle_x = Vector::Zero(n);
    for (int c = 0; c < d; ++c) oracle_x(support[c]) = ls(c);
    CHECK(relative_error(sol.x_hat, oracle_x) < 1e-3);
    CHECK(recovery_success(sol, x, 1e-3));
  }
}

TEST_CASE("block structure helps: Bob recovers what Eve cannot") {
  const int n = 80, m = 40, r = 10;
  int bob = 0, eve = 0;
  for (int t = 0; t < 10; ++t) {
    auto ch = gen_gaussian_channel(m, n, Seed(300 + t));
    auto bs = random_block_structure(n, r, Seed(400 + t));
    Vector x = Vector::Zero(n);
    Rng rng(Seed(500 + t));
    for (int q : {0, 1})
      for (int i : bs.block(q)) x(i) = rng.normal();
    Vector y = ch.a() * x;
    bob += recovery_success(block_basis_pursuit(ch, y, bs, {}), x, 1e-3);
    eve += recovery_success(basis_pursuit(ch, y, {}), x, 1e-3);
  }
  CHECK(bob >= 9);
  CHECK(eve <= bob - 5);
}

TEST_CASE("noise epsilon and BER helpers") {
  CHECK(noise_epsilon(0.0, 10) == kNoiselessEpsilon);
  CHECK(noise_epsilon(4.0, 100) == doctest::Approx(2 * std::sqrt(100 + 2 * std::sqrt(100 * std::log(100.0)))));
  CHECK(bpsk_decision(0.7) == 1.0);
  CHECK(bpsk_decision(-0.51) == -1.0);
  CHECK(bpsk_decision(0.49) == 0.0);
  Vector truth(5), est(5);
  truth << 1, -1, 0, 1, 0;
  est << 0.9, 0.2, 0.8, -2, 0;
  CHECK(ber_bpsk(est, truth) == doctest::Approx(2.0 / 3.0));
  CHECK(ber_bpsk(est, Vector::Zero(5)) == 0.0);
  SolverOptions bad;
  bad.relaxation = 2.5;
  CHECK_THROWS(bad.validate());
}
