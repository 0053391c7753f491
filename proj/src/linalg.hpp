#pragma once

// Sparse linear algebra over (local site, direction) tables. Internal.

#include <Eigen/Sparse>
#include <cstddef>
#include <span>
#include <vector>

#include "percoldp/cluster_graph.hpp"

namespace percoldp::detail {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// N x N matrix with entry (x, neighbor(x,e)) += values[x, e] over open edges,
/// plus `diagonal` on the diagonal.
SparseMatrix edge_matrix(const GiantCluster& cluster, std::span<const double> values, double diagonal = 0.0);

/// Left fixed point of a row-stochastic edge table, normalized to sum 1.
std::vector<double> solve_stationary(const GiantCluster& cluster, std::span<const double> prob);

/// Solves (I - P) h = rhs with h[anchor] = 0. rhs must be centered under the
/// invariant distribution of P for the solution to satisfy every row.
std::vector<double> solve_poisson(const GiantCluster& cluster, std::span<const double> prob,
                                  std::span<const double> rhs, std::size_t anchor);

/// max_x |sum_y phi(y) P(y,x) - phi(x)|.
double balance_residual(const GiantCluster& cluster, std::span<const double> prob, std::span<const double> phi);

}  // namespace percoldp::detail
