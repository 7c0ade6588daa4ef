#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace upcc {

/// Deterministic pseudo-random generator: xoshiro256** seeded through
/// splitmix64. Every draw is defined in terms of 64-bit integer arithmetic,
/// so a given seed yields the same sequence on every platform. Distribution
/// helpers are implemented here rather than taken from <random>, whose
/// distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [0, bound). bound must be positive.
  std::size_t below(std::size_t bound);
  /// Standard normal via the Box-Muller transform (one cached spare).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Independent stream for (this seed, stream id); used to give each
  /// dataset instance its own generator.
  Rng fork(std::uint64_t stream) const;

  template <typename It>
  void shuffle(It first, It last) {
    auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = below(i);
      auto tmp = std::move(first[i - 1]);
      first[i - 1] = std::move(first[j]);
      first[j] = std::move(tmp);
    }
  }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace upcc
