#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "percoldp/cluster_graph.hpp"
#include "percoldp/rng.hpp"
#include "percoldp/test_function.hpp"

namespace percoldp {

/// Step distribution per giant-cluster site. Admissible means each row sums
/// to one and is strictly positive exactly on the open edges.
class TransitionKernel {
 public:
  /// Validates admissibility; throws AdmissibilityError otherwise.
  TransitionKernel(ClusterPtr cluster, std::vector<double> prob);

  const ClusterPtr& cluster() const noexcept { return cluster_; }
  const GiantCluster& graph() const noexcept { return *cluster_; }
  std::span<const double> values() const noexcept { return prob_; }
  double operator()(std::size_t local, int dir) const noexcept {
    return prob_[local * static_cast<std::size_t>(cluster_->directions()) + static_cast<std::size_t>(dir)];
  }

 private:
  ClusterPtr cluster_;
  std::vector<double> prob_;
};

/// Row sums within 1e-12 and support equal to the open mask.
bool is_admissible(const GiantCluster& cluster, std::span<const double> prob, std::string* why = nullptr);

/// Agile simple random walk: uniform over the open incident edges.
TransitionKernel srw_kernel(const ClusterPtr& cluster);

/// Biased walk with weight beta on +e_1 and 1 elsewhere, beta > 1.
TransitionKernel beta_kernel(const ClusterPtr& cluster, double beta);

/// Row-normalized tilt kernel(x,e) * exp(f(x,e) + g(x) - g(x+e)); g indexed by
/// local site.
TransitionKernel tilt_from_potential(const TransitionKernel& kernel, const TestFunction& f,
                                     std::span<const double> g);
/// Same with f already tabulated.
TransitionKernel tilt_from_table(const TransitionKernel& kernel, std::span<const double> f_table,
                                 std::span<const double> g);

/// Random admissible kernel: weights exp(spread * u), u uniform in (-1, 1).
TransitionKernel random_kernel(const ClusterPtr& cluster, CounterRng& rng, double spread = 2.0);

/// Walk path. Positions are tracked on the universal cover so that windings
/// around the torus are counted.
struct Trajectory {
  ClusterPtr cluster;
  std::size_t start = 0;  // local index
  std::vector<std::uint8_t> steps;

  std::size_t length() const noexcept { return steps.size(); }
  /// Unwrapped displacement X_n - X_0.
  std::vector<std::int64_t> displacement() const;
  /// Local site after every step, starting with `start` (length n + 1).
  std::vector<std::size_t> sites() const;
};

Trajectory simulate(const TransitionKernel& kernel, std::size_t start, std::size_t n, std::uint64_t stream_seed);

/// One step from `local` drawn with uniform variate u in [0, 1).
int sample_step(const TransitionKernel& kernel, std::size_t local, double u) noexcept;

/// Unwrapped displacement divided by n.
std::vector<double> mean_velocity(const Trajectory& traj);

/// CSV rows "step_index,direction_index".
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

}  // namespace percoldp
