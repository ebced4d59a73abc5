// SPDX-License-Identifier: Apache-2.0
#include "blockveil/baseline.hpp"

#include "blockveil/eavesdrop.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace blockveil {

namespace {

struct Prepared {
  double weight = 0.0;
  const Matrix* cov = nullptr;
  Matrix inverse;
  double logdet = 0.0;
};

Prepared prepare(const MixtureComponent& c, bool& regularized) {
  Prepared out;
  out.weight = c.weight;
  out.cov = &c.covariance;
  const Eigen::Index m = c.covariance.rows();
  Eigen::LLT<Matrix> llt(c.covariance);
  bool ok = llt.info() == Eigen::Success;
  if (ok) {
    const Vector diag = llt.matrixLLT().diagonal();
    ok = diag.minCoeff() > 1e-12 * std::max(1.0, diag.maxCoeff());
  }
  if (!ok) {
    regularized = true;
    const double tr = c.covariance.trace();
    const double ridge = tr > 0.0 ? 1e-10 * tr / static_cast<double>(m) : 1e-10;
    Matrix reg = c.covariance;
    reg.diagonal().array() += ridge;
    llt.compute(reg);
    if (llt.info() != Eigen::Success) throw std::runtime_error("mixture component covariance is not PSD");
  }
  out.inverse = llt.solve(Matrix::Identity(m, m));
  out.logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return out;
}

// KL(N(0, a) || N(0, b)) from prepared factors.
double kl_prepared(const Prepared& a, const Prepared& b) {
  const double m = static_cast<double>(a.cov->rows());
  const double tr = b.inverse.cwiseProduct(*a.cov).sum();
  return 0.5 * (tr - m + b.logdet - a.logdet);
}

double log_sum_exp(const std::vector<double>& logs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : logs) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double v : logs) s += std::exp(v - hi);
  return hi + std::log(s);
}

// log sum_b v_b exp(-KL(f_a || g_b)) for every a with w_a > 0.
std::vector<double> log_affinity(const std::vector<Prepared>& f, const std::vector<Prepared>& g) {
  std::vector<double> out(f.size(), 0.0);
  std::vector<double> logs;
  for (std::size_t a = 0; a < f.size(); ++a) {
    if (f[a].weight <= 0.0) continue;
    logs.clear();
    for (const auto& gb : g)
      if (gb.weight > 0.0) logs.push_back(std::log(gb.weight) - kl_prepared(f[a], gb));
    out[a] = log_sum_exp(logs);
  }
  return out;
}

double combine(const std::vector<Prepared>& f, const std::vector<double>& self,
               const std::vector<double>& cross) {
  double d = 0.0;
  for (std::size_t a = 0; a < f.size(); ++a)
    if (f[a].weight > 0.0) d += f[a].weight * (self[a] - cross[a]);
  return std::max(0.0, d);
}

std::vector<Prepared> prepare_all(const OutputMixture& mix, bool& regularized) {
  std::vector<Prepared> out;
  out.reserve(mix.components.size());
  for (const auto& c : mix.components) out.push_back(prepare(c, regularized));
  return out;
}

}  // namespace

OutputMixture output_mixture(const ChannelMatrix& ch, const BlockStructure& bs, double p, double sigma2) {
  if (bs.size() != ch.cols()) throw std::invalid_argument("block structure does not match channel width");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("sigma2 must be >= 0");
  const int r = bs.block_count();
  if (r > kMaxMixtureBlocks)
    throw std::invalid_argument("output mixture has 2^" + std::to_string(r) + " components; r must be <= " +
                                std::to_string(kMaxMixtureBlocks));
  const int m = ch.rows();

  std::vector<Matrix> block_cov;
  block_cov.reserve(static_cast<std::size_t>(r));
  for (int q = 0; q < r; ++q) {
    Matrix aq(m, static_cast<Eigen::Index>(bs.block(q).size()));
    for (std::size_t c = 0; c < bs.block(q).size(); ++c) aq.col(static_cast<Eigen::Index>(c)) = ch.a().col(bs.block(q)[c]);
    Matrix cq = Matrix::Zero(m, m);
    cq.selfadjointView<Eigen::Lower>().rankUpdate(aq);
    block_cov.push_back(cq.selfadjointView<Eigen::Lower>());
  }

  OutputMixture mix;
  mix.dim = m;
  const std::uint32_t count = 1u << r;
  mix.components.reserve(count);
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    const int k = std::popcount(mask);
    MixtureComponent comp{std::pow(p, k) * std::pow(1.0 - p, r - k), sigma2 * Matrix::Identity(m, m), mask};
    for (int q = 0; q < r; ++q)
      if (mask & (1u << q)) comp.covariance += block_cov[static_cast<std::size_t>(q)];
    mix.components.push_back(std::move(comp));
  }
  return mix;
}

double gaussian_kl(const Matrix& s1, const Matrix& s2) {
  if (s1.rows() != s2.rows() || s1.cols() != s2.cols() || s1.rows() != s1.cols())
    throw std::invalid_argument("covariances must be square and of equal size");
  bool reg = false;
  const MixtureComponent c1{1.0, s1, 0}, c2{1.0, s2, 0};
  const Prepared a = prepare(c1, reg);
  const Prepared b = prepare(c2, reg);
  return kl_prepared(a, b);
}

KlResult variational_kl(const OutputMixture& f, const OutputMixture& g) {
  if (f.dim != g.dim) throw std::invalid_argument("mixtures live in different dimensions");
  if (f.components.empty() || g.components.empty()) throw std::invalid_argument("empty mixture");
  KlResult out;
  const auto pf = prepare_all(f, out.regularized);
  const auto pg = prepare_all(g, out.regularized);
  out.value = combine(pf, log_affinity(pf, pf), log_affinity(pf, pg));
  return out;
}

std::string CandidateSearch::describe() const {
  std::ostringstream s;
  if (kind == Kind::kAllSingleSwaps)
    s << "all single swaps";
  else
    s << "sampled single swaps (" << max_candidates << ", seed " << seed << ")";
  return s.str();
}

std::vector<Candidate> single_swap_candidates(const BlockStructure& bs, const CandidateSearch& search) {
  const int n = bs.size();
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (bs.label(i) != bs.label(j)) pairs.emplace_back(i, j);

  if (search.kind == CandidateSearch::Kind::kSampledSingleSwaps) {
    if (search.max_candidates < 1) throw std::invalid_argument("sampled search needs max_candidates >= 1");
    if (static_cast<std::size_t>(search.max_candidates) < pairs.size()) {
      Rng rng(Seed(search.seed));
      std::shuffle(pairs.begin(), pairs.end(), rng.engine());
      pairs.resize(static_cast<std::size_t>(search.max_candidates));
      std::sort(pairs.begin(), pairs.end());
    }
  }

  std::vector<Candidate> out;
  out.reserve(pairs.size());
  for (auto [i, j] : pairs) {
    std::vector<int> labels = bs.labels();
    std::swap(labels[static_cast<std::size_t>(i)], labels[static_cast<std::size_t>(j)]);
    out.push_back({BlockStructure::from_labels(std::move(labels)),
                   "swap " + std::to_string(i + 1) + " <-> " + std::to_string(j + 1)});
  }
  return out;
}

double hoeffding_rate_at(double d_star, double snapshots) { return std::exp(-snapshots * d_star * d_star); }

HoeffdingCurve hoeffding_rate(const ChannelMatrix& ch, const BlockStructure& bs, double p, double sigma2,
                              const std::vector<double>& l_grid, const CandidateSearch& search) {
  return hoeffding_rate(ch, bs, p, sigma2, l_grid, single_swap_candidates(bs, search), search.describe());
}

namespace {

std::vector<int> active_columns(const BlockStructure& s, std::uint32_t mask) {
  std::vector<int> cols;
  for (int q = 0; q < s.block_count(); ++q)
    if (mask & (1u << q)) cols.insert(cols.end(), s.block(q).begin(), s.block(q).end());
  std::sort(cols.begin(), cols.end());
  return cols;
}

// Everything about the true mixture that the candidate loop reuses.
struct TruthCache {
  std::vector<Prepared> comps;
  Matrix kl;  // kl(a, b) = KL(f_a || f_b)
  Matrix trace;  // <Sigma_b^{-1}, Sigma_a>
  std::vector<double> self;
  std::vector<std::vector<int>> columns;
  std::vector<Matrix> block_a;
};

// Columns whose presence differs between a candidate component and the
// true component of the same mask; above this the component is refactored.
constexpr std::size_t kMaxLowRank = 8;

}  // namespace

HoeffdingCurve hoeffding_rate(const ChannelMatrix& ch, const BlockStructure& bs, double p, double sigma2,
                              const std::vector<double>& l_grid, const std::vector<Candidate>& candidates,
                              const std::string& search_description) {
  if (candidates.empty()) throw std::invalid_argument("no candidate structures to compare against");
  for (double l : l_grid)
    if (!(l >= 0.0)) throw std::invalid_argument("snapshot counts must be >= 0");

  HoeffdingCurve out;
  out.search = search_description;
  out.candidates = static_cast<int>(candidates.size());

  const OutputMixture truth = output_mixture(ch, bs, p, sigma2);
  const std::size_t nc = truth.components.size();
  const double m = truth.dim;
  const Matrix& a_mat = ch.a();

  TruthCache tc;
  tc.comps = prepare_all(truth, out.regularized);
  const bool low_rank_ok = !out.regularized;
  tc.kl.resize(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(nc));
  tc.trace.resizeLike(tc.kl);
  for (std::size_t a = 0; a < nc; ++a)
    for (std::size_t b = 0; b < nc; ++b) {
      const double tr = tc.comps[b].inverse.cwiseProduct(*tc.comps[a].cov).sum();
      tc.trace(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = tr;
      tc.kl(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          0.5 * (tr - m + tc.comps[b].logdet - tc.comps[a].logdet);
    }
  for (const auto& c : truth.components) tc.columns.push_back(active_columns(bs, c.active_mask));
  for (int q = 0; q < bs.block_count(); ++q) {
    Matrix aq(a_mat.rows(), static_cast<Eigen::Index>(bs.block(q).size()));
    for (std::size_t c = 0; c < bs.block(q).size(); ++c) aq.col(static_cast<Eigen::Index>(c)) = a_mat.col(bs.block(q)[c]);
    tc.block_a.push_back(std::move(aq));
  }

  auto log_mix = [&](const Matrix& kl, const std::vector<double>& weights) {
    std::vector<double> res(nc, 0.0), logs;
    for (std::size_t a = 0; a < nc; ++a) {
      if (tc.comps[a].weight <= 0.0) continue;
      logs.clear();
      for (std::size_t b = 0; b < weights.size(); ++b)
        if (weights[b] > 0.0)
          logs.push_back(std::log(weights[b]) - kl(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
      res[a] = log_sum_exp(logs);
    }
    return res;
  };
  std::vector<double> true_weights;
  for (const auto& c : tc.comps) true_weights.push_back(c.weight);
  tc.self = log_mix(tc.kl, true_weights);

  out.d_star = std::numeric_limits<double>::infinity();
  Matrix kl_alt(static_cast<Eigen::Index>(nc), 0);
  for (const auto& cand : candidates) {
    if (cand.structure.size() != bs.size()) throw std::invalid_argument("candidate structure has wrong size");
    if (structures_equal(cand.structure, bs)) continue;
    const int r_alt = cand.structure.block_count();
    if (r_alt > kMaxMixtureBlocks) throw std::invalid_argument("candidate has too many blocks");
    const std::size_t na = std::size_t{1} << r_alt;
    kl_alt.resize(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(na));
    std::vector<double> alt_weights(na);

    for (std::size_t b = 0; b < na; ++b) {
      const auto mask = static_cast<std::uint32_t>(b);
      const int act = std::popcount(mask);
      alt_weights[b] = std::pow(p, act) * std::pow(1.0 - p, r_alt - act);
      const auto eb = static_cast<Eigen::Index>(b);
      const std::vector<int> cols = active_columns(cand.structure, mask);

      std::vector<int> added, removed;
      const bool comparable = b < nc;
      if (comparable) {
        std::set_difference(cols.begin(), cols.end(), tc.columns[b].begin(), tc.columns[b].end(),
                            std::back_inserter(added));
        std::set_difference(tc.columns[b].begin(), tc.columns[b].end(), cols.begin(), cols.end(),
                            std::back_inserter(removed));
      }
      const std::size_t k = added.size() + removed.size();

      if (comparable && k == 0) {
        kl_alt.col(eb) = tc.kl.col(eb);
        continue;
      }
      if (comparable && low_rank_ok && k <= kMaxLowRank) {
        // Sigma' = Sigma_b + U S U^T with S = diag(+1 added, -1 removed).
        const auto ek = static_cast<Eigen::Index>(k);
        Matrix u(a_mat.rows(), ek);
        Vector s(ek);
        Eigen::Index c = 0;
        for (int i : added) { u.col(c) = a_mat.col(i); s(c++) = 1.0; }
        for (int i : removed) { u.col(c) = a_mat.col(i); s(c++) = -1.0; }
        const Matrix w = u.transpose() * tc.comps[b].inverse;  // U^T Sigma_b^{-1}
        Matrix j = w * u;
        j.diagonal() += s;  // S^{-1} + U^T Sigma_b^{-1} U
        Eigen::FullPivLU<Matrix> lu(j);
        // det(I + S W U) = det(S) det(J)
        const double det = lu.determinant() * s.prod();
        if (lu.isInvertible() && det > 0.0) {
          const double logdet = tc.comps[b].logdet + std::log(det);
          const Matrix jinv = lu.inverse();
          const Matrix wa = w * a_mat;
          std::vector<Matrix> gq;
          for (const auto& aq : tc.block_a) {
            Matrix wq = w * aq;
            gq.push_back(wq * wq.transpose());
          }
          Matrix wwt = w * w.transpose();
          for (std::size_t a = 0; a < nc; ++a) {
            Matrix quad = sigma2 * wwt;
            for (int q = 0; q < bs.block_count(); ++q)
              if (truth.components[a].active_mask & (1u << q)) quad += gq[static_cast<std::size_t>(q)];
            const double tr = tc.trace(static_cast<Eigen::Index>(a), eb) - jinv.cwiseProduct(quad.transpose()).sum();
            kl_alt(static_cast<Eigen::Index>(a), eb) = 0.5 * (tr - m + logdet - tc.comps[a].logdet);
          }
          continue;
        }
      }
      MixtureComponent comp{alt_weights[b], sigma2 * Matrix::Identity(a_mat.rows(), a_mat.rows()), mask};
      for (int i : cols) comp.covariance.selfadjointView<Eigen::Lower>().rankUpdate(a_mat.col(i));
      comp.covariance = comp.covariance.selfadjointView<Eigen::Lower>();
      const Prepared pb = prepare(comp, out.regularized);
      for (std::size_t a = 0; a < nc; ++a) kl_alt(static_cast<Eigen::Index>(a), eb) = kl_prepared(tc.comps[a], pb);
    }

    const auto cross = log_mix(kl_alt, alt_weights);
    double d = 0.0;
    for (std::size_t a = 0; a < nc; ++a)
      if (tc.comps[a].weight > 0.0) d += tc.comps[a].weight * (tc.self[a] - cross[a]);
    d = std::max(0.0, d);
    if (d < out.d_star) {
      out.d_star = d;
      out.argmin = cand.description;
    }
  }
  if (!std::isfinite(out.d_star)) throw std::invalid_argument("every candidate equals the true structure");

  for (double l : l_grid) {
    out.snapshots.push_back(l);
    out.rate.push_back(hoeffding_rate_at(out.d_star, l));
  }
  return out;
}

}  // namespace blockveil
