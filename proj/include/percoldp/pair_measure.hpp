#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "percoldp/rng.hpp"
#include "percoldp/transfer_spectral.hpp"
#include "percoldp/walk_kernel.hpp"

namespace percoldp {

/// Probability measure on (giant-cluster site, direction), stored as a slot
/// table local * 2d + dir. Sites carry the uniform reference measure, so the
/// table is the periodized joint law of (environment seen from the walker,
/// next step).
class PairMeasure {
 public:
  /// Throws AdmissibilityError on negative weights, mass on closed edges, or
  /// total mass off by more than 1e-12.
  PairMeasure(ClusterPtr cluster, std::vector<double> weights);

  const ClusterPtr& cluster() const noexcept { return cluster_; }
  const GiantCluster& graph() const noexcept { return *cluster_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double operator()(std::size_t local, int dir) const noexcept {
    return weights_[local * static_cast<std::size_t>(cluster_->directions()) + static_cast<std::size_t>(dir)];
  }

  /// x * a + (1 - x) * b on the same cluster.
  static PairMeasure mix(const PairMeasure& a, const PairMeasure& b, double x);

 private:
  ClusterPtr cluster_;
  std::vector<double> weights_;
};

/// mu(x, e) = (# steps taken from x in direction e) / n.
PairMeasure pair_empirical(const Trajectory& traj);

struct Marginals {
  std::vector<double> first;   // sum_e mu(x, e)
  std::vector<double> second;  // sum_e mu(x - e, e)
};
Marginals marginals(const PairMeasure& mu);

struct MembershipReport {
  bool member = false;
  double imbalance = 0.0;  // |(mu)_1 - (mu)_2|_1
  std::string violation;   // first failed clause, empty when member
};

/// Membership in the balanced class: equal marginals within tol, and at every
/// site with positive mass the conditional step law is nonzero exactly on the
/// open edges.
MembershipReport in_m1_star(const PairMeasure& mu, double tol = 1e-9);

/// Kernel with a site density phi of mean one under the uniform site measure.
struct KernelDensityPair {
  TransitionKernel kernel;
  std::vector<double> density;
  bool invariant = false;
};

/// Kernel together with its invariant density.
KernelDensityPair make_invariant_pair(const TransitionKernel& kernel);

/// mu(x, e) = kernel(x, e) * phi(x) / N. Throws AdmissibilityError unless the
/// pair is flagged invariant and phi balances within 1e-9.
PairMeasure pair_from(const KernelDensityPair& kdp);

/// Inverse of pair_from: kernel = mu / (mu)_1, phi = N * (mu)_1. Throws
/// AdmissibilityError when mu is not balanced.
KernelDensityPair kdp_from(const PairMeasure& mu);

/// pair_from(make_invariant_pair(kernel)).
PairMeasure stationary_pair(const TransitionKernel& kernel);

/// Random balanced measure with full support: symmetric random weights on
/// every open bond plus randomly oriented circulation around open plaquettes
/// of the first two axes.
PairMeasure random_balanced(const ClusterPtr& cluster, CounterRng& rng);

/// Half the l1 distance. Both measures must live on the same cluster.
double total_variation(const PairMeasure& a, const PairMeasure& b);

/// sum mu(x, e) f(x, e) for a slot table f.
double expectation(const PairMeasure& mu, std::span<const double> f_table);

struct ErgodicAverage {
  double time_average = 0.0;
  double stationary_expectation = 0.0;
  double gap = 0.0;          // |time_average - stationary_expectation|
  double batch_sigma = 0.0;  // batch-means standard error of the time average
};

/// Time average of f along one trajectory of length n from the anchor and the
/// exact stationary expectation. The error estimate splits the path into
/// `batches` consecutive blocks.
ErgodicAverage ergodic_average(const TransitionKernel& kernel, const TestFunction& f, std::size_t n,
                               std::uint64_t stream_seed, std::size_t batches = 100);

/// CSV rows "site_index,direction_index,weight" over nonzero weights; the
/// site index is the lattice site.
void write_pair_csv(const PairMeasure& mu, std::ostream& out);

}  // namespace percoldp
