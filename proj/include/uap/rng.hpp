#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace uap {

/// Seeded pseudorandom source shared by data generation, initialization,
/// shuffling and random baselines.
///
/// The engine is std::mt19937_64, whose state transition and output
/// sequence are fixed by the C++ standard. The derived distributions are
/// implemented here rather than taken from <random> because the standard
/// distributions are implementation-defined:
///
///   uniform()  = (next_u64() >> 11) * 2^-53                  in [0, 1)
///   normal()   = Box-Muller on two uniforms, u1 := 1 - uniform();
///                the sine branch is cached and returned by the next call.
///   index(n)   = rejection sampling on next_u64() below the largest
///                multiple of n, then modulo n.
///
/// A generator is single-owner; do not share one across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t index(std::uint64_t n);

  /// Fisher-Yates shuffle, last element first.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace uap
