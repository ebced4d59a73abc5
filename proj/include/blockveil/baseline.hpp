// SPDX-License-Identifier: Apache-2.0
//
// Statistical baseline for the moment attack: the channel output is a
// zero-mean Gaussian mixture indexed by the set of active blocks, and the
// Hoeffding rate exp(-L min KL^2) compares the true mixture with those of
// competing block structures.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blockveil/channel.hpp"
#include "blockveil/linalg.hpp"
#include "blockveil/protocol.hpp"
#include "blockveil/rng.hpp"

namespace blockveil {

struct MixtureComponent {
  double weight;
  Matrix covariance;
  std::uint32_t active_mask;  ///< bit q set when block q is active
};

struct OutputMixture {
  int dim = 0;
  std::vector<MixtureComponent> components;
};

/// Largest block count accepted by output_mixture (2^r components).
inline constexpr int kMaxMixtureBlocks = 20;

/// Component S: weight p^|S| (1-p)^(r-|S|), covariance
/// sigma2 I + sum_{q in S} A_q A_q^T.
OutputMixture output_mixture(const ChannelMatrix& ch, const BlockStructure& bs, double p, double sigma2);

/// KL(N(0, s1) || N(0, s2)).
double gaussian_kl(const Matrix& s1, const Matrix& s2);

struct KlResult {
  double value = 0.0;
  bool regularized = false;  ///< a singular component covariance was ridged
};

/// Variational approximation of KL(f || g) between Gaussian mixtures:
///   sum_a w_a log( sum_a' w_a' exp(-KL(f_a||f_a')) / sum_b v_b exp(-KL(f_a||g_b)) ),
/// clamped at zero.
KlResult variational_kl(const OutputMixture& f, const OutputMixture& g);

/// Competing structures for the minimum over B' != B.
struct CandidateSearch {
  enum class Kind { kAllSingleSwaps, kSampledSingleSwaps };
  Kind kind = Kind::kAllSingleSwaps;
  int max_candidates = 0;  ///< sample size for kSampledSingleSwaps
  std::uint64_t seed = 0;

  std::string describe() const;
};

struct Candidate {
  BlockStructure structure;
  std::string description;
};

/// Structures obtained by exchanging one index between two blocks.
std::vector<Candidate> single_swap_candidates(const BlockStructure& bs, const CandidateSearch& search);

struct HoeffdingCurve {
  std::vector<double> snapshots;
  std::vector<double> rate;
  double d_star = 0.0;  ///< min variational KL(true || candidate)
  std::string argmin;
  std::string search;
  int candidates = 0;
  bool regularized = false;
};

/// exp(-L d^2).
double hoeffding_rate_at(double d_star, double snapshots);

HoeffdingCurve hoeffding_rate(const ChannelMatrix& ch, const BlockStructure& bs, double p, double sigma2,
                              const std::vector<double>& l_grid, const CandidateSearch& search);

HoeffdingCurve hoeffding_rate(const ChannelMatrix& ch, const BlockStructure& bs, double p, double sigma2,
                              const std::vector<double>& l_grid, const std::vector<Candidate>& candidates,
                              const std::string& search_description = "explicit");

}  // namespace blockveil
