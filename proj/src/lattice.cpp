#include "percoldp/lattice.hpp"

#include <algorithm>
#include <cstdlib>

#include "percoldp/error.hpp"

namespace percoldp {

LatticeTorus::LatticeTorus(int dim, std::int64_t side) : dim_(dim), side_(side) {
  if (dim < 2) throw ParameterError("lattice dimension d must be >= 2");
  if (side < 2) throw ParameterError("lattice side L must be >= 2");
  site_count_ = 1;
  for (int i = 0; i < dim; ++i) {
    if (site_count_ > (std::size_t{1} << 40) / static_cast<std::size_t>(side))
      throw ParameterError("lattice too large");
    site_count_ *= static_cast<std::size_t>(side);
  }
  stride_.assign(static_cast<std::size_t>(dim), 1);
  for (int i = dim - 2; i >= 0; --i)
    stride_[static_cast<std::size_t>(i)] =
        stride_[static_cast<std::size_t>(i) + 1] * static_cast<std::size_t>(side);
}

Point LatticeTorus::step_vector(int dir) const {
  Point v(static_cast<std::size_t>(dim_), 0);
  v[static_cast<std::size_t>(axis_of(dir))] = sign_of(dir);
  return v;
}

std::size_t LatticeTorus::neighbor(std::size_t site, int dir) const noexcept {
  const auto axis = static_cast<std::size_t>(axis_of(dir));
  const std::size_t s = stride_[axis];
  const auto L = static_cast<std::size_t>(side_);
  const std::size_t c = (site / s) % L;
  if (sign_of(dir) > 0) return c + 1 == L ? site - (L - 1) * s : site + s;
  return c == 0 ? site + (L - 1) * s : site - s;
}

std::size_t LatticeTorus::bond_of(std::size_t site, int dir) const noexcept {
  const auto d = static_cast<std::size_t>(dim_);
  if (dir < dim_) return site * d + static_cast<std::size_t>(dir);
  return neighbor(site, dir) * d + static_cast<std::size_t>(dir - dim_);
}

Point LatticeTorus::coords(std::size_t site) const {
  Point x(static_cast<std::size_t>(dim_));
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = static_cast<std::int64_t>((site / stride_[i]) % static_cast<std::size_t>(side_));
  return x;
}

std::size_t LatticeTorus::site_of(std::span<const std::int64_t> x) const {
  if (x.size() != static_cast<std::size_t>(dim_)) throw ParameterError("coordinate dimension mismatch");
  std::size_t s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<std::size_t>(wrap(x[i], side_)) * stride_[i];
  return s;
}

std::int64_t LatticeTorus::torus_l1(std::size_t a, std::size_t b) const {
  const Point xa = coords(a);
  const Point xb = coords(b);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < xa.size(); ++i) {
    const std::int64_t diff = std::llabs(xa[i] - xb[i]);
    total += std::min(diff, side_ - diff);
  }
  return total;
}

std::int64_t LatticeTorus::torus_linf(std::size_t a, std::size_t b) const {
  const Point xa = coords(a);
  const Point xb = coords(b);
  std::int64_t best = 0;
  for (std::size_t i = 0; i < xa.size(); ++i) {
    const std::int64_t diff = std::llabs(xa[i] - xb[i]);
    best = std::max(best, std::min(diff, side_ - diff));
  }
  return best;
}

}  // namespace percoldp
