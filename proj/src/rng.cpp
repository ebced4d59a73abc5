// SPDX-License-Identifier: Apache-2.0
#include "blockveil/rng.hpp"

namespace blockveil {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Seed Seed::derive(std::uint64_t index) const {
  return Seed(splitmix64(value_ ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

}  // namespace blockveil
