#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "percoldp/lattice.hpp"

namespace percoldp {

/// Bond configuration on a periodic box. Bond b is open with probability p,
/// decided by counter_u64(seed, b) (see rng.hpp); the configuration is a pure
/// function of (lattice, p, seed) unless produced by translate() or loading.
class Environment {
 public:
  Environment(LatticeTorus lattice, double p, std::uint64_t seed, std::vector<std::uint64_t> words);

  const LatticeTorus& lattice() const noexcept { return lattice_; }
  double p() const noexcept { return p_; }
  std::uint64_t seed() const noexcept { return seed_; }

  bool bond_open(std::size_t bond) const noexcept {
    return (words_[bond >> 6] >> (bond & 63)) & 1U;
  }
  bool open(std::size_t site, int dir) const noexcept {
    return bond_open(lattice_.bond_of(site, dir));
  }
  int degree(std::size_t site) const noexcept;
  std::size_t open_bond_count() const noexcept;

  /// Raw bond bits, 64 per word, bond b at bit (b mod 64) of word b/64.
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  friend bool operator==(const Environment& a, const Environment& b) {
    return a.lattice_ == b.lattice_ && a.p_ == b.p_ && a.seed_ == b.seed_ && a.words_ == b.words_;
  }

 private:
  LatticeTorus lattice_;
  double p_;
  std::uint64_t seed_;
  std::vector<std::uint64_t> words_;
};

/// Each bond open independently with probability p. The endpoints p = 0 and
/// p = 1 are accepted and give the all-closed and all-open configurations.
Environment sample_environment(int dim, std::int64_t side, double p, std::uint64_t seed);

/// Environment with every bond open (p recorded as 1).
Environment all_open(int dim, std::int64_t side);

/// Shifted configuration: (tau_x omega)_b = omega_(x+b).
Environment translate(const Environment& env, std::span<const std::int64_t> shift);

// PERC file format, all integers little-endian:
//   "PERC" | u8 version=1 | u32 d | u32 L | f64 p | u64 seed |
//   ceil(d L^d / 8) bytes of bond bits in bond order, LSB first, zero padded.
inline constexpr std::uint8_t kPercVersion = 1;

std::vector<std::uint8_t> serialize(const Environment& env);
Environment deserialize(std::span<const std::uint8_t> bytes);

void write_environment(const Environment& env, const std::string& path);
Environment read_environment(const std::string& path);

}  // namespace percoldp
