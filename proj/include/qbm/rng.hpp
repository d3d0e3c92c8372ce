#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace qbm {

/// SplitMix64 finalizer. Bijective 64-bit mixing function.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a child seed from a parent seed and a stream index. Results depend
/// only on the arguments, so work items seeded this way produce the same
/// values regardless of which thread runs them or in what order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// Folds derive_seed over a path of indices: derive(derive(seed, a), b)...
std::uint64_t derive_seed(std::uint64_t seed,
                          std::initializer_list<std::uint64_t> path) noexcept;

/// Seedable, splittable generator. Wraps mt19937_64 with portable
/// conversions so streams are bit-identical across standard libraries
/// (std::uniform_real_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform integer in [lo, hi], inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi);

  bool bit() { return (engine_() >> 63) != 0; }

  /// Independent child generator for stream `index`.
  Rng split(std::uint64_t index) const { return Rng(derive_seed(seed_, index)); }

  /// In-place Fisher-Yates shuffle.
  template <typename RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace qbm
