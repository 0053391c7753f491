#pragma once

// Periodic cubic lattice (Z/LZ)^d.
//
// Sites are numbered row-major: the first coordinate varies slowest, so
// site = sum_i x_i * L^(d-1-i). Directions are numbered 0..2d-1 with
// k < d meaning +e_(k+1) and k >= d meaning -e_(k-d+1). Undirected bonds are
// numbered site * d + axis for the bond joining site and site + e_(axis+1).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace percoldp {

using Point = std::vector<std::int64_t>;

class LatticeTorus {
 public:
  LatticeTorus(int dim, std::int64_t side);

  int dim() const noexcept { return dim_; }
  std::int64_t side() const noexcept { return side_; }
  std::size_t site_count() const noexcept { return site_count_; }
  std::size_t bond_count() const noexcept { return site_count_ * static_cast<std::size_t>(dim_); }
  int direction_count() const noexcept { return 2 * dim_; }

  int axis_of(int dir) const noexcept { return dir < dim_ ? dir : dir - dim_; }
  int sign_of(int dir) const noexcept { return dir < dim_ ? 1 : -1; }
  int opposite(int dir) const noexcept { return dir < dim_ ? dir + dim_ : dir - dim_; }
  int direction(int axis, int sign) const noexcept { return sign > 0 ? axis : axis + dim_; }

  /// Unit step vector of a direction.
  Point step_vector(int dir) const;

  /// Neighbor of `site` across direction `dir` (wrapping).
  std::size_t neighbor(std::size_t site, int dir) const noexcept;

  /// Undirected bond index used by the edge (site, dir).
  std::size_t bond_of(std::size_t site, int dir) const noexcept;

  /// Coordinates in [0, L)^d.
  Point coords(std::size_t site) const;

  /// Site of arbitrary integer coordinates, reduced modulo L.
  std::size_t site_of(std::span<const std::int64_t> x) const;

  /// Shortest-path distance on the full torus graph (periodic L1 metric).
  std::int64_t torus_l1(std::size_t a, std::size_t b) const;
  /// Periodic sup-norm distance.
  std::int64_t torus_linf(std::size_t a, std::size_t b) const;

  friend bool operator==(const LatticeTorus&, const LatticeTorus&) = default;

 private:
  int dim_;
  std::int64_t side_;
  std::size_t site_count_;
  std::vector<std::size_t> stride_;
};

/// Floor-modulo into [0, m).
constexpr std::int64_t wrap(std::int64_t v, std::int64_t m) noexcept {
  const std::int64_t r = v % m;
  return r < 0 ? r + m : r;
}

}  // namespace percoldp
