// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace blockveil {

/// Seed for a deterministic random stream. Child seeds are derived by
/// hashing, so a single master seed fans out into independent streams
/// without any shared generator state.
class Seed {
 public:
  constexpr explicit Seed(std::uint64_t value) : value_(value) {}

  constexpr std::uint64_t value() const { return value_; }

  /// Child stream `index` of this seed.
  Seed derive(std::uint64_t index) const;
  Seed derive(std::uint64_t index, std::uint64_t sub) const { return derive(index).derive(sub); }

  friend constexpr bool operator==(Seed, Seed) = default;

 private:
  std::uint64_t value_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Thin wrapper around a 64-bit Mersenne twister with the draws the
/// simulation needs.
class Rng {
 public:
  explicit Rng(Seed seed) : engine_(splitmix64(seed.value())) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  bool bernoulli(double p) { return uniform() < p; }
  /// +1 or -1 with equal probability.
  double sign() { return (engine_() >> 63) ? 1.0 : -1.0; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace blockveil
