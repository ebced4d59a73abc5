// SPDX-License-Identifier: Apache-2.0
//
// Alice's side of the protocol: the secret block structure, block-sparse
// message encoding and transmission through the public channel.
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "blockveil/linalg.hpp"
#include "blockveil/rng.hpp"

namespace blockveil {

class ChannelMatrix;

/// Partition of the signal indices {0..n-1} into blocks. Labels are
/// 0-based internally (serialized 1-based).
///
/// The secret structures shared by Alice and Bob always have r blocks of
/// equal length d = n / r. Structures recovered by clustering may have
/// any number of blocks of any size; `equal_sized()` tells them apart.
class BlockStructure {
 public:
  /// Any partition; labels must cover 0..k-1 with every block non-empty.
  static BlockStructure from_labels(std::vector<int> labels);
  /// Equal-size partition into r blocks; throws unless every label in
  /// 0..r-1 occurs exactly n / r times.
  static BlockStructure from_labels(std::vector<int> labels, int r);
  /// Blocks {0..d-1}, {d..2d-1}, ...
  static BlockStructure contiguous(int n, int r);

  int size() const { return static_cast<int>(labels_.size()); }
  int block_count() const { return static_cast<int>(blocks_.size()); }
  bool equal_sized() const { return equal_sized_; }
  /// d = n / r; throws for unequal partitions.
  int block_length() const;

  int label(int i) const { return labels_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& labels() const { return labels_; }
  /// Member indices of block q, ascending.
  const std::vector<int>& block(int q) const { return blocks_[static_cast<std::size_t>(q)]; }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }

 private:
  explicit BlockStructure(std::vector<int> labels);

  std::vector<int> labels_;
  std::vector<std::vector<int>> blocks_;
  bool equal_sized_ = false;
};

/// Uniformly random equal-size partition of n indices into r blocks.
BlockStructure random_block_structure(int n, int r, Seed seed);

/// b_ij = 1 iff i and j share a block.
Matrix indicator_matrix(const BlockStructure& bs);

enum class Constellation { kGaussian, kBpsk };

std::string_view to_string(Constellation c);
Constellation parse_constellation(std::string_view s);

/// Fourth moment of an active entry: 3 for N(0,1), 1 for +-1.
double kurtosis(Constellation c);

/// Block activation probability and the alphabet of active entries.
/// The analysis regime is p <= 1/2; larger p (down to beta < 1 in
/// sweeps) is accepted but flagged by `in_analysis_regime()`.
struct SignalSpec {
  double p = 0.0;
  Constellation constellation = Constellation::kGaussian;

  void validate() const;
  bool in_analysis_regime() const { return p <= 0.5; }
};

struct TransmissionConfig {
  SignalSpec spec;
  double sigma2 = 0.0;
  int snapshots = 1;

  void validate() const;
};

/// One block-sparse message: each block is active with probability p,
/// active blocks carry i.i.d. N(0,1) or equiprobable +-1 entries.
Vector encode(const BlockStructure& bs, const SignalSpec& spec, Seed seed);

/// y = A x + w with w ~ N(0, sigma2 I).
Vector transmit(const ChannelMatrix& ch, const Vector& x, double sigma2, Seed seed);

/// Messages and channel outputs for snapshots first .. first+count-1.
/// Snapshot l uses encode(seed.derive(l, 0)) and transmit(seed.derive(l, 1)),
/// so any prefix or slice of a run is reproducible on its own.
struct SnapshotBatch {
  Matrix x;  ///< n x count
  Matrix y;  ///< m x count
};
SnapshotBatch generate_snapshots(const ChannelMatrix& ch, const BlockStructure& bs,
                                 const TransmissionConfig& cfg, Seed seed, int first, int count);

/// m x L matrix of channel outputs for cfg.snapshots snapshots.
Matrix snapshots(const ChannelMatrix& ch, const BlockStructure& bs, const TransmissionConfig& cfg,
                 Seed seed);

/// Output SNR p n^2 / (sigma2 m^2) for a unit-norm-column channel.
double snr(double p, int n, int m, double sigma2);
double snr_db(double p, int n, int m, double sigma2);
/// Noise variance giving the requested SNR in dB.
double sigma2_for_snr_db(double p, int n, int m, double snr_db);

/// beta = m / (n p): measurements per expected non-zero entry.
double redundancy_beta(int m, int n, double p);
/// Activation probability giving the requested beta.
double p_for_beta(int m, int n, double beta);

}  // namespace blockveil
