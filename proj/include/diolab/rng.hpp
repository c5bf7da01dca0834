#pragma once

#include <cstdint>

#include "diolab/numkit.hpp"

namespace diolab {

// Counter-based generator: every draw is a pure function of (seed, position),
// so independently forked streams can be consumed in any order — including
// across parallel workers — without changing a single value.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  // 64-bit word at stream position i.
  std::uint64_t at(std::uint64_t i) const { return mix(seed_ + (i + 1) * kGolden); }

  // Dyadic uniform in [0, 1) with 53 random bits.
  double uniform01_at(std::uint64_t i) const {
    return static_cast<double>(at(i) >> 11) * 0x1.0p-53;
  }

  // Sequential convenience over the same stream.
  std::uint64_t next() { return at(pos_++); }
  double uniform01() { return uniform01_at(pos_++); }

  // Independent child stream number k (stable under reordering).
  CounterRng fork(std::uint64_t k) const { return CounterRng(mix(seed_ ^ mix(k + kLeaf))); }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t kLeaf = 0x632BE59BD9B4E019ull;

  std::uint64_t seed_ = 0;
  std::uint64_t pos_ = 0;
};

// m x n matrix with independent uniform [0, 1) entries, row major order.
inline Mat random_theta(CounterRng rng, int m, int n) {
  Mat th(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) th(i, j) = rng.uniform01();
  return th;
}

}  // namespace diolab
