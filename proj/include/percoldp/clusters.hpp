#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "percoldp/environment.hpp"
#include "percoldp/rng.hpp"

namespace percoldp {

/// Connected components of the open-bond graph. Every site carries a label;
/// labels are numbered in order of the smallest site they contain, so label
/// 0 is the cluster of site 0.
struct ClusterLabeling {
  std::vector<std::uint32_t> label;  // per site
  std::vector<std::size_t> size;     // per label
  std::uint32_t giant_label = 0;     // largest cluster, smallest label on ties
  bool origin_in_giant = false;

  std::size_t giant_size() const { return size.at(giant_label); }
  bool in_giant(std::size_t site) const { return label[site] == giant_label; }
};

ClusterLabeling label_clusters(const Environment& env);

struct ConditionOptions {
  std::size_t max_tries = 1000;
  /// Minimum giant size as a fraction of the site count.
  double min_giant_fraction = 0.5;
};

struct ConditionedSample {
  Environment env;
  ClusterLabeling labels;
  std::size_t tries = 1;  // samples drawn, including the accepted one
};

/// Resample until the origin lies in a giant cluster of at least
/// min_giant_fraction * L^d sites. Try t uses seed `seed` for t = 0 and
/// derive_seed(seed, t) afterwards.
ConditionedSample condition_on_origin(int dim, std::int64_t side, double p, std::uint64_t seed,
                                      const ConditionOptions& opts = {});

/// Length of the shortest open path, or nullopt when x and y are in
/// different clusters.
std::optional<std::int64_t> chemical_distance(const Environment& env, const ClusterLabeling& labels,
                                              std::size_t x, std::size_t y);

struct ChemDistPair {
  std::size_t x = 0;
  std::size_t y = 0;
  std::int64_t linf = 0;      // periodic sup-norm distance
  std::int64_t l1 = 0;        // periodic L1 (torus graph) distance
  std::int64_t chemical = 0;  // open-path distance
  double ratio() const { return static_cast<double>(chemical) / static_cast<double>(l1); }
};

struct ChemDistReport {
  std::vector<ChemDistPair> pairs;
  // Percentiles of chemical / l1 over the sampled pairs; zero when empty.
  double p50 = 0.0;
  double p90 = 0.0;
  double p99 = 0.0;
  double max = 0.0;
};

/// Distinct site pairs drawn uniformly from the giant cluster.
ChemDistReport chemdist_survey(const Environment& env, const ClusterLabeling& labels,
                               std::size_t n_pairs, CounterRng& rng);

/// Nearest-rank percentile of a sample, q in [0, 1].
double percentile(std::vector<double> values, double q);

struct DensityReport {
  std::int64_t radius = 0;  // sup-norm half width r; each box holds (2r)^d sites
  std::int64_t stride = 0;  // spacing of the box-center grid
  std::vector<std::size_t> counts;
  std::size_t min = 0;
  double mean = 0.0;
  /// delta^d (2n)^d theta_hat / 2 with n = L/2 and theta_hat the giant fraction.
  double lower_bound = 0.0;
};

/// Giant-cluster sites in the boxes x + [-r, r)^d, r = floor(delta * L/2),
/// for centers on a grid of spacing max(r, 1).
DensityReport density_count(const Environment& env, const ClusterLabeling& labels, double delta);

}  // namespace percoldp
