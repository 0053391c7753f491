#include "linalg.hpp"

#include <Eigen/SparseLU>
#include <cmath>

#include "percoldp/error.hpp"

namespace percoldp::detail {
namespace {

using Triplet = Eigen::Triplet<double>;

std::vector<Triplet> edge_triplets(const GiantCluster& c, std::span<const double> values, bool transpose) {
  std::vector<Triplet> t;
  t.reserve(c.open_edge_count() + c.size());
  const int dirs = c.directions();
  for (std::size_t i = 0; i < c.size(); ++i)
    for (int k = 0; k < dirs; ++k) {
      const auto j = c.neighbor(i, k);
      if (j == GiantCluster::kClosed) continue;
      const double v = values[i * static_cast<std::size_t>(dirs) + static_cast<std::size_t>(k)];
      if (transpose)
        t.emplace_back(j, static_cast<int>(i), v);
      else
        t.emplace_back(static_cast<int>(i), j, v);
    }
  return t;
}

std::vector<double> lu_solve(const SparseMatrix& a, const Eigen::VectorXd& b, const char* what) {
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw NumericError(std::string(what) + ": sparse LU factorization failed");
  const Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw NumericError(std::string(what) + ": sparse LU solve failed");
  return {x.data(), x.data() + x.size()};
}

// I - P (or its transpose) with row `pin` replaced by the unit row e_pin.
SparseMatrix pinned_generator(const GiantCluster& c, std::span<const double> prob, bool transpose, std::size_t pin) {
  auto t = edge_triplets(c, prob, transpose);
  for (auto& e : t) e = Triplet(e.row(), e.col(), -e.value());
  for (std::size_t i = 0; i < c.size(); ++i) t.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
  std::erase_if(t, [pin](const Triplet& e) { return static_cast<std::size_t>(e.row()) == pin; });
  t.emplace_back(static_cast<int>(pin), static_cast<int>(pin), 1.0);
  const auto n = static_cast<Eigen::Index>(c.size());
  SparseMatrix a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

}  // namespace

SparseMatrix edge_matrix(const GiantCluster& c, std::span<const double> values, double diagonal) {
  auto t = edge_triplets(c, values, false);
  if (diagonal != 0.0)
    for (std::size_t i = 0; i < c.size(); ++i) t.emplace_back(static_cast<int>(i), static_cast<int>(i), diagonal);
  const auto n = static_cast<Eigen::Index>(c.size());
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

std::vector<double> solve_stationary(const GiantCluster& c, std::span<const double> prob) {
  if (c.size() == 1) return {1.0};
  const std::size_t pin = 0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.size()));
  b[static_cast<Eigen::Index>(pin)] = 1.0;
  auto phi = lu_solve(pinned_generator(c, prob, true, pin), b, "stationary distribution");
  double total = 0.0;
  for (const double v : phi) total += v;
  if (!(total > 0.0)) throw NumericError("stationary distribution: nonpositive total mass");
  for (auto& v : phi) {
    v /= total;
    if (v < 0.0) v = 0.0;  // roundoff on sites of vanishing mass
  }
  return phi;
}

std::vector<double> solve_poisson(const GiantCluster& c, std::span<const double> prob, std::span<const double> rhs,
                                  std::size_t anchor) {
  Eigen::VectorXd b(static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) b[static_cast<Eigen::Index>(i)] = rhs[i];
  b[static_cast<Eigen::Index>(anchor)] = 0.0;
  return lu_solve(pinned_generator(c, prob, false, anchor), b, "Poisson equation");
}

double balance_residual(const GiantCluster& c, std::span<const double> prob, std::span<const double> phi) {
  std::vector<double> inflow(c.size(), 0.0);
  const int dirs = c.directions();
  for (std::size_t i = 0; i < c.size(); ++i)
    for (int k = 0; k < dirs; ++k) {
      const auto j = c.neighbor(i, k);
      if (j != GiantCluster::kClosed)
        inflow[static_cast<std::size_t>(j)] += phi[i] * prob[i * static_cast<std::size_t>(dirs) + static_cast<std::size_t>(k)];
    }
  double worst = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) worst = std::max(worst, std::abs(inflow[i] - phi[i]));
  return worst;
}

}  // namespace percoldp::detail
