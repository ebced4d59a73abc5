#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"

#include "blockveil/linalg.hpp"
#include "blockveil/protocol.hpp"
#include "blockveil/rng.hpp"

using namespace blockveil;

TEST_CASE("seed derivation is deterministic and separates streams") {
  Seed s(42);
  CHECK(s.derive(3) == Seed(42).derive(3));
  CHECK_FALSE(s.derive(3) == s.derive(4));
  CHECK_FALSE(s.derive(1, 0) == s.derive(0, 1));
  Rng a(s.derive(7)), b(s.derive(7));
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
}

TEST_CASE("block structures validate their labels") {
  CHECK_THROWS(BlockStructure::from_labels({0, 0, 2}));
  CHECK_THROWS(BlockStructure::from_labels({0, 0, 0, 1}, 2));
  CHECK_THROWS(BlockStructure::from_labels({}));
  auto bs = BlockStructure::from_labels({1, 0, 1, 0}, 2);
  CHECK(bs.equal_sized());
  CHECK(bs.block_length() == 2);
  CHECK(bs.block(0) == std::vector<int>{1, 3});
  auto uneven = BlockStructure::from_labels({0, 0, 0, 1});
  CHECK_FALSE(uneven.equal_sized());
  CHECK_THROWS(uneven.block_length());
  CHECK_THROWS(BlockStructure::contiguous(10, 3));
}

TEST_CASE("indicator matrix algebra") {
  for (auto [n, r] : {std::pair{12, 3}, {20, 5}, {64, 8}}) {
    const int d = n / r;
    auto bs = random_block_structure(n, r, Seed(n * 31 + r));
    Matrix b = indicator_matrix(bs);
    CHECK(is_symmetric(b));
    CHECK((b * b - d * b).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK(symmetric_spectral_norm(b) == doctest::Approx(d).epsilon(1e-12));
    Eigen::SelfAdjointEigenSolver<Matrix> es(b);
    int rank = 0;
    for (int i = 0; i < n; ++i) rank += es.eigenvalues()(i) > 0.5;
    CHECK(rank == r);
    CHECK(b.diagonal().sum() == doctest::Approx(n));
  }
}

TEST_CASE("random block structures are uniform over partitions") {
  // n = 6, r = 2: 10 unordered partitions into two triples.
  const int draws = 20000;
  std::map<std::vector<int>, int> counts;
  for (int t = 0; t < draws; ++t) {
    auto bs = random_block_structure(6, 2, Seed(9).derive(t));
    counts[bs.block(bs.label(0))]++;
  }
  REQUIRE(counts.size() == 10);
  for (const auto& [block, c] : counts) {
    CHECK(block.front() == 0);
    CHECK(static_cast<double>(c) / draws == doctest::Approx(0.1).epsilon(0.2));
  }
}

namespace {

struct EmpiricalMoments {
  double m2 = 0, m4 = 0, same = 0, diff = 0, cross = 0, var_sq = 0;
};

EmpiricalMoments encoder_moments(Constellation c, double p, int draws) {
  // n = 4, blocks {0,1} {2,3}
  auto bs = BlockStructure::contiguous(4, 2);
  EmpiricalMoments e;
  double sq_mean = 0, sq_sq = 0;
  for (int t = 0; t < draws; ++t) {
    Vector x = encode(bs, {p, c}, Seed(77).derive(t));
    e.m2 += x(0) * x(0);
    e.m4 += std::pow(x(0), 4);
    e.same += x(0) * x(0) * x(1) * x(1);
    e.diff += x(0) * x(0) * x(2) * x(2);
    e.cross += x(0) * x(1);
    sq_mean += x(3) * x(3);
    sq_sq += std::pow(x(3), 4);
  }
  e.m2 /= draws;
  e.m4 /= draws;
  e.same /= draws;
  e.diff /= draws;
  e.cross /= draws;
  sq_mean /= draws;
  e.var_sq = sq_sq / draws - sq_mean * sq_mean;
  return e;
}

}  // namespace

TEST_CASE("encoder second and fourth moments") {
  const double p = 0.3;
  const int draws = 200000;
  // Tolerances are about five standard errors of each estimator.
  SUBCASE("gaussian") {
    auto e = encoder_moments(Constellation::kGaussian, p, draws);
    CHECK(e.m2 == doctest::Approx(p).epsilon(0.02));
    CHECK(e.m4 == doctest::Approx(3 * p).epsilon(0.05));
    CHECK(e.same == doctest::Approx(p).epsilon(0.05));
    CHECK(e.diff == doctest::Approx(p * p).epsilon(0.05));
    CHECK(std::abs(e.cross) < 0.006);
    CHECK(e.var_sq == doctest::Approx(3 * p - p * p).epsilon(0.05));
  }
  SUBCASE("bpsk") {
    auto e = encoder_moments(Constellation::kBpsk, p, draws);
    CHECK(e.m2 == doctest::Approx(p).epsilon(0.02));
    CHECK(e.m4 == doctest::Approx(p).epsilon(0.02));
    CHECK(e.same == doctest::Approx(p).epsilon(0.02));
    CHECK(e.diff == doctest::Approx(p * p).epsilon(0.03));
    CHECK(std::abs(e.cross) < 0.006);
    CHECK(e.var_sq == doctest::Approx(p - p * p).epsilon(0.03));
  }
}

TEST_CASE("encoded messages are block sparse") {
  auto bs = random_block_structure(40, 8, Seed(5));
  for (int t = 0; t < 50; ++t) {
    Vector x = encode(bs, {0.4, Constellation::kBpsk}, Seed(6).derive(t));
    for (int q = 0; q < bs.block_count(); ++q) {
      int nonzero = 0;
      for (int i : bs.block(q)) {
        nonzero += x(i) != 0.0;
        if (x(i) != 0.0) CHECK(std::abs(x(i)) == 1.0);
      }
      CHECK((nonzero == 0 || nonzero == bs.block_length()));
    }
  }
  Vector zero = encode(bs, {0.0, Constellation::kGaussian}, Seed(1));
  CHECK(zero.isZero());
  CHECK_THROWS(encode(bs, {1.5, Constellation::kGaussian}, Seed(1)));
}

TEST_CASE("snr and beta helpers invert each other") {
  const double p = p_for_beta(100, 200, 2.5);
  CHECK(p == doctest::Approx(0.2));
  CHECK(redundancy_beta(100, 200, p) == doctest::Approx(2.5));
  const double s2 = sigma2_for_snr_db(p, 200, 100, 7.0);
  CHECK(snr_db(p, 200, 100, s2) == doctest::Approx(7.0));
  CHECK(snr_db(p, 200, 100, sigma2_for_snr_db(p, 200, 100, 0.0)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(parse_constellation(to_string(Constellation::kBpsk)) == Constellation::kBpsk);
  CHECK_THROWS(parse_constellation("qam"));
}
