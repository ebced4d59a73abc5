// SPDX-License-Identifier: Apache-2.0
#include "blockveil/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "blockveil/channel.hpp"

namespace blockveil {

BlockStructure::BlockStructure(std::vector<int> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw std::invalid_argument("block structure must cover at least one index");
  const int k = *std::max_element(labels_.begin(), labels_.end()) + 1;
  if (*std::min_element(labels_.begin(), labels_.end()) < 0)
    throw std::invalid_argument("block labels must be non-negative");
  blocks_.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < static_cast<int>(labels_.size()); ++i)
    blocks_[static_cast<std::size_t>(labels_[static_cast<std::size_t>(i)])].push_back(i);
  for (const auto& b : blocks_)
    if (b.empty()) throw std::invalid_argument("block labels must be contiguous (empty block found)");
  equal_sized_ = std::all_of(blocks_.begin(), blocks_.end(),
                             [&](const auto& b) { return b.size() == blocks_.front().size(); });
}

BlockStructure BlockStructure::from_labels(std::vector<int> labels) {
  return BlockStructure(std::move(labels));
}

BlockStructure BlockStructure::from_labels(std::vector<int> labels, int r) {
  const int n = static_cast<int>(labels.size());
  if (r <= 0 || n % r != 0)
    throw std::invalid_argument("block count " + std::to_string(r) + " does not divide n=" +
                                std::to_string(n));
  BlockStructure bs(std::move(labels));
  if (bs.block_count() != r || !bs.equal_sized())
    throw std::invalid_argument("labels do not form " + std::to_string(r) +
                                " blocks of equal length");
  return bs;
}

BlockStructure BlockStructure::contiguous(int n, int r) {
  if (r <= 0 || n <= 0 || n % r != 0)
    throw std::invalid_argument("block count must divide n");
  const int d = n / r;
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i / d;
  return from_labels(std::move(labels), r);
}

int BlockStructure::block_length() const {
  if (!equal_sized_) throw std::logic_error("block structure has unequal block sizes");
  return static_cast<int>(blocks_.front().size());
}

BlockStructure random_block_structure(int n, int r, Seed seed) {
  if (r <= 0 || n <= 0 || n % r != 0)
    throw std::invalid_argument("block count " + std::to_string(r) + " does not divide n=" +
                                std::to_string(n));
  const int d = n / r;
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i / d;
  // Fisher-Yates written out so the permutation does not depend on the
  // standard library's shuffle implementation.
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.engine()() % static_cast<std::uint64_t>(i + 1));
    std::swap(labels[static_cast<std::size_t>(i)], labels[static_cast<std::size_t>(j)]);
  }
  return BlockStructure::from_labels(std::move(labels), r);
}

Matrix indicator_matrix(const BlockStructure& bs) {
  const int n = bs.size();
  Matrix b(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) b(i, j) = bs.label(i) == bs.label(j) ? 1.0 : 0.0;
  return b;
}

std::string_view to_string(Constellation c) {
  return c == Constellation::kGaussian ? "gaussian" : "bpsk";
}

Constellation parse_constellation(std::string_view s) {
  if (s == "gaussian") return Constellation::kGaussian;
  if (s == "bpsk") return Constellation::kBpsk;
  throw std::invalid_argument("unknown constellation '" + std::string(s) + "'");
}

double kurtosis(Constellation c) { return c == Constellation::kGaussian ? 3.0 : 1.0; }

void SignalSpec::validate() const {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("activation probability must lie in [0, 1]");
}

void TransmissionConfig::validate() const {
  spec.validate();
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("noise variance must be >= 0");
  if (snapshots < 1) throw std::invalid_argument("snapshot count must be >= 1");
}

Vector encode(const BlockStructure& bs, const SignalSpec& spec, Seed seed) {
  spec.validate();
  Rng rng(seed);
  Vector x = Vector::Zero(bs.size());
  for (const auto& members : bs.blocks()) {
    if (!rng.bernoulli(spec.p)) continue;
    for (int i : members)
      x(i) = spec.constellation == Constellation::kGaussian ? rng.normal() : rng.sign();
  }
  return x;
}

namespace {

void add_noise(Eigen::Ref<Vector> y, double sigma2, Seed seed) {
  if (sigma2 == 0.0) return;
  Rng rng(seed);
  const double sigma = std::sqrt(sigma2);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += sigma * rng.normal();
}

Matrix apply_channel(const ChannelMatrix& ch, const Matrix& x) {
  Matrix y(ch.rows(), x.cols());
  y.noalias() = ch.a() * x;
  return y;
}

}  // namespace

Vector transmit(const ChannelMatrix& ch, const Vector& x, double sigma2, Seed seed) {
  if (x.size() != ch.cols())
    throw std::invalid_argument("signal length " + std::to_string(x.size()) +
                                " does not match channel width " + std::to_string(ch.cols()));
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("noise variance must be >= 0");
  Matrix y = apply_channel(ch, Matrix(x));
  Vector out = y.col(0);
  add_noise(out, sigma2, seed);
  return out;
}

SnapshotBatch generate_snapshots(const ChannelMatrix& ch, const BlockStructure& bs,
                                 const TransmissionConfig& cfg, Seed seed, int first, int count) {
  cfg.spec.validate();
  if (!(cfg.sigma2 >= 0.0)) throw std::invalid_argument("noise variance must be >= 0");
  if (bs.size() != ch.cols())
    throw std::invalid_argument("block structure does not match channel width");
  if (first < 0 || count < 0) throw std::invalid_argument("negative snapshot range");
  SnapshotBatch out;
  out.x = Matrix(ch.cols(), count);
  for (int l = 0; l < count; ++l)
    out.x.col(l) = encode(bs, cfg.spec, seed.derive(static_cast<std::uint64_t>(first + l), 0));
  if (count == 1) {
    out.y = transmit(ch, out.x.col(0), cfg.sigma2, seed.derive(static_cast<std::uint64_t>(first), 1));
    return out;
  }
  out.y = apply_channel(ch, out.x);
  for (int l = 0; l < count; ++l)
    add_noise(out.y.col(l), cfg.sigma2, seed.derive(static_cast<std::uint64_t>(first + l), 1));
  return out;
}

Matrix snapshots(const ChannelMatrix& ch, const BlockStructure& bs, const TransmissionConfig& cfg,
                 Seed seed) {
  cfg.validate();
  return generate_snapshots(ch, bs, cfg, seed, 0, cfg.snapshots).y;
}

double snr(double p, int n, int m, double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("SNR undefined for sigma2 <= 0");
  const double nn = n;
  const double mm = m;
  return p * nn * nn / (sigma2 * mm * mm);
}

double snr_db(double p, int n, int m, double sigma2) { return 10.0 * std::log10(snr(p, n, m, sigma2)); }

double sigma2_for_snr_db(double p, int n, int m, double db) {
  const double nn = n;
  const double mm = m;
  return p * nn * nn / (mm * mm * std::pow(10.0, db / 10.0));
}

double redundancy_beta(int m, int n, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("redundancy undefined for p <= 0");
  return static_cast<double>(m) / (static_cast<double>(n) * p);
}

double p_for_beta(int m, int n, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  return static_cast<double>(m) / (static_cast<double>(n) * beta);
}

}  // namespace blockveil
