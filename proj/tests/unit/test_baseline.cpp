#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"

#include "blockveil/baseline.hpp"
#include "blockveil/eavesdrop.hpp"

using namespace blockveil;

TEST_CASE("gaussian KL: zero on itself, closed form on scalars") {
  Matrix a(1, 1), b(1, 1);
  a << 2.0;
  b << 5.0;
  CHECK(gaussian_kl(a, a) == doctest::Approx(0.0));
  CHECK(gaussian_kl(a, b) == doctest::Approx(0.5 * (2.0 / 5.0 - 1.0 + std::log(5.0 / 2.0))));
  Matrix s = Matrix::Identity(3, 3);
  s(0, 1) = s(1, 0) = 0.4;
  CHECK(gaussian_kl(s, s) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(gaussian_kl(s, Matrix::Identity(3, 3)) > 0.0);
  CHECK_THROWS(gaussian_kl(s, Matrix::Identity(2, 2)));
}

TEST_CASE("output mixture weights and covariances") {
  auto ch = gen_gaussian_channel(4, 8, Seed(1));
  auto bs = BlockStructure::contiguous(8, 2);
  auto mix = output_mixture(ch, bs, 0.3, 0.1);
  REQUIRE(mix.components.size() == 4);
  double total = 0;
  for (const auto& c : mix.components) {
    total += c.weight;
    Matrix expect = 0.1 * Matrix::Identity(4, 4);
    for (int q = 0; q < 2; ++q)
      if (c.active_mask & (1u << q))
        for (int i : bs.block(q)) expect += ch.a().col(i) * ch.a().col(i).transpose();
    CHECK((c.covariance - expect).norm() < 1e-12);
  }
  CHECK(total == doctest::Approx(1.0));
  CHECK(variational_kl(mix, mix).value == doctest::Approx(0.0).epsilon(1e-12));
  auto other = output_mixture(ch, BlockStructure::from_labels({0, 1, 0, 1, 0, 1, 0, 1}, 2), 0.3, 0.1);
  CHECK(variational_kl(mix, other).value > 0.0);
}

TEST_CASE("single swaps") {
  auto bs = BlockStructure::contiguous(12, 3);
  auto all = single_swap_candidates(bs, {});
  CHECK(all.size() == 3u * 4 * 4);
  for (const auto& c : all) CHECK_FALSE(structures_equal(c.structure, bs));
  CHECK(all.front().description == "swap 1 <-> 5");
  CandidateSearch sampled{CandidateSearch::Kind::kSampledSingleSwaps, 7, 3};
  CHECK(single_swap_candidates(bs, sampled).size() == 7u);
  sampled.max_candidates = 0;
  CHECK_THROWS(single_swap_candidates(bs, sampled));
}

TEST_CASE("fast Hoeffding search equals the direct mixture computation") {
  const int n = 16, m = 8, r = 4;
  auto ch = gen_gaussian_channel(m, n, Seed(12));
  auto bs = random_block_structure(n, r, Seed(13));
  const double p = 0.25, sigma2 = 0.05;
  auto truth = output_mixture(ch, bs, p, sigma2);

  auto cands = single_swap_candidates(bs, {});
  // Far-off candidates exercise the full refactorisation path.
  cands.push_back({random_block_structure(n, r, Seed(14)), "random a"});
  cands.push_back({random_block_structure(n, r, Seed(15)), "random b"});

  double direct = std::numeric_limits<double>::infinity();
  std::string best;
  for (const auto& c : cands) {
    if (structures_equal(c.structure, bs)) continue;
    const double v = variational_kl(truth, output_mixture(ch, c.structure, p, sigma2)).value;
    if (v < direct) {
      direct = v;
      best = c.description;
    }
  }
  auto curve = hoeffding_rate(ch, bs, p, sigma2, {0, 10, 100}, cands);
  CHECK(curve.d_star == doctest::Approx(direct).epsilon(1e-8));
  CHECK(curve.argmin == best);
  CHECK(curve.rate[0] == 1.0);
  CHECK(curve.rate[2] == doctest::Approx(std::exp(-100 * direct * direct)));
  CHECK(curve.candidates == static_cast<int>(cands.size()));
}

TEST_CASE("Hoeffding search rejects degenerate inputs") {
  auto ch = gen_gaussian_channel(4, 8, Seed(1));
  auto bs = BlockStructure::contiguous(8, 2);
  CHECK_THROWS(hoeffding_rate(ch, bs, 0.3, 0.1, {10}, std::vector<Candidate>{}));
  CHECK_THROWS(hoeffding_rate(ch, bs, 0.3, 0.1, {10}, std::vector<Candidate>{{bs, "self"}}));
  CHECK_THROWS(output_mixture(gen_gaussian_channel(20, 42, Seed(1)), BlockStructure::contiguous(42, 21), 0.1, 0.1));
  CHECK(hoeffding_rate_at(0.1, 200) == doctest::Approx(std::exp(-2.0)));
}
