#pragma once

// Counter-based random numbers.
//
// The generator is SplitMix64 used in counter mode: the k-th output for a
// key is the SplitMix64 finalizer applied to key + (k + 1) * golden_gamma.
// Any output can therefore be computed directly from (key, k), which makes
// per-edge sampling and per-trajectory streams independent of evaluation
// order and worker count.

#include <cstdint>
#include <limits>

namespace percoldp {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 output function (Stafford "mix13" variant).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// k-th output of the SplitMix64 sequence started from `key`.
constexpr std::uint64_t counter_u64(std::uint64_t key, std::uint64_t k) noexcept {
  return mix64(key + (k + 1) * kGoldenGamma);
}

/// Top 53 bits mapped to [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline constexpr std::uint64_t kStreamSalt = 0xD1B54A32D192ED03ULL;

/// Seed of the `index`-th derived stream of `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return counter_u64(master ^ kStreamSalt, index);
}

/// Stateful view over a counter stream. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept { return counter_u64(key_, counter_++); }

  /// Uniform double in [0, 1).
  constexpr double uniform() noexcept { return to_unit((*this)()); }

  /// Uniform integer in [0, n), n > 0. Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) noexcept {
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>((*this)()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace percoldp
