#include "percoldp/clusters.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "percoldp/error.hpp"

namespace percoldp {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
};

constexpr std::uint32_t kUnset = 0xFFFFFFFFU;

}  // namespace

ClusterLabeling label_clusters(const Environment& env) {
  const LatticeTorus& lat = env.lattice();
  const std::size_t n = lat.site_count();
  DisjointSets sets(n);
  for (std::size_t x = 0; x < n; ++x)
    for (int axis = 0; axis < lat.dim(); ++axis)
      if (env.open(x, axis)) sets.unite(x, lat.neighbor(x, axis));

  ClusterLabeling out;
  out.label.assign(n, kUnset);
  std::vector<std::uint32_t> root_label(n, kUnset);
  for (std::size_t x = 0; x < n; ++x) {
    const std::size_t r = sets.find(x);
    if (root_label[r] == kUnset) {
      root_label[r] = static_cast<std::uint32_t>(out.size.size());
      out.size.push_back(0);
    }
    out.label[x] = root_label[r];
    ++out.size[root_label[r]];
  }
  // max_element returns the first maximum, i.e. the smallest label on ties.
  out.giant_label = static_cast<std::uint32_t>(std::max_element(out.size.begin(), out.size.end()) - out.size.begin());
  out.origin_in_giant = out.label[0] == out.giant_label;
  return out;
}

ConditionedSample condition_on_origin(int dim, std::int64_t side, double p, std::uint64_t seed,
                                      const ConditionOptions& opts) {
  if (opts.max_tries == 0) throw ParameterError("max_tries must be positive");
  for (std::size_t t = 0; t < opts.max_tries; ++t) {
    const std::uint64_t s = t == 0 ? seed : derive_seed(seed, t);
    Environment env = sample_environment(dim, side, p, s);
    ClusterLabeling labels = label_clusters(env);
    const double fraction =
        static_cast<double>(labels.giant_size()) / static_cast<double>(env.lattice().site_count());
    if (labels.origin_in_giant && fraction >= opts.min_giant_fraction)
      return ConditionedSample{std::move(env), std::move(labels), t + 1};
  }
  throw ConditioningError("origin not in a giant cluster after " + std::to_string(opts.max_tries) + " tries",
                          opts.max_tries);
}

std::optional<std::int64_t> chemical_distance(const Environment& env, const ClusterLabeling& labels,
                                              std::size_t x, std::size_t y) {
  const LatticeTorus& lat = env.lattice();
  if (x >= lat.site_count() || y >= lat.site_count()) throw ParameterError("site index out of range");
  if (labels.label[x] != labels.label[y]) return std::nullopt;
  if (x == y) return 0;
  std::vector<std::int64_t> dist(lat.site_count(), -1);
  std::deque<std::size_t> queue{x};
  dist[x] = 0;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (int k = 0; k < lat.direction_count(); ++k) {
      if (!env.open(u, k)) continue;
      const std::size_t v = lat.neighbor(u, k);
      if (dist[v] >= 0) continue;
      dist[v] = dist[u] + 1;
      if (v == y) return dist[v];
      queue.push_back(v);
    }
  }
  throw ConsistencyError("sites share a label but BFS did not connect them");
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

ChemDistReport chemdist_survey(const Environment& env, const ClusterLabeling& labels, std::size_t n_pairs,
                               CounterRng& rng) {
  ChemDistReport report;
  if (n_pairs == 0) return report;
  if (labels.giant_size() < 2) throw DegenerateClusterError("giant cluster has fewer than 2 sites");
  std::vector<std::size_t> giant;
  giant.reserve(labels.giant_size());
  for (std::size_t s = 0; s < labels.label.size(); ++s)
    if (labels.in_giant(s)) giant.push_back(s);

  const LatticeTorus& lat = env.lattice();
  std::vector<double> ratios;
  ratios.reserve(n_pairs);
  report.pairs.reserve(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const std::size_t x = giant[rng.below(giant.size())];
    std::size_t y = x;
    while (y == x) y = giant[rng.below(giant.size())];
    ChemDistPair pair{x, y, lat.torus_linf(x, y), lat.torus_l1(x, y), *chemical_distance(env, labels, x, y)};
    ratios.push_back(pair.ratio());
    report.pairs.push_back(pair);
  }
  report.p50 = percentile(ratios, 0.50);
  report.p90 = percentile(ratios, 0.90);
  report.p99 = percentile(ratios, 0.99);
  report.max = *std::max_element(ratios.begin(), ratios.end());
  return report;
}

DensityReport density_count(const Environment& env, const ClusterLabeling& labels, double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw ParameterError("radius fraction delta must lie in (0, 1]");
  const LatticeTorus& lat = env.lattice();
  const int d = lat.dim();
  const std::int64_t L = lat.side();
  const std::int64_t n = L / 2;
  DensityReport out;
  out.radius = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(delta * static_cast<double>(n))));
  out.stride = std::max<std::int64_t>(1, out.radius);
  const double theta_hat = static_cast<double>(labels.giant_size()) / static_cast<double>(lat.site_count());
  out.lower_bound = std::pow(delta, d) * std::pow(2.0 * static_cast<double>(n), d) * theta_hat / 2.0;

  const std::int64_t width = 2 * out.radius;
  std::vector<std::int64_t> center(static_cast<std::size_t>(d), 0);
  std::vector<std::int64_t> offset(static_cast<std::size_t>(d), 0);
  Point probe(static_cast<std::size_t>(d));
  const std::int64_t centers_per_axis = (L + out.stride - 1) / out.stride;
  std::size_t total_centers = 1;
  for (int i = 0; i < d; ++i) total_centers *= static_cast<std::size_t>(centers_per_axis);
  for (std::size_t c = 0; c < total_centers; ++c) {
    std::size_t rest = c;
    for (int i = d - 1; i >= 0; --i) {
      center[static_cast<std::size_t>(i)] =
          static_cast<std::int64_t>(rest % static_cast<std::size_t>(centers_per_axis)) * out.stride;
      rest /= static_cast<std::size_t>(centers_per_axis);
    }
    std::size_t count = 0;
    std::fill(offset.begin(), offset.end(), 0);
    while (true) {
      for (std::size_t i = 0; i < probe.size(); ++i) probe[i] = center[i] - out.radius + offset[i];
      if (labels.in_giant(lat.site_of(probe))) ++count;
      std::size_t axis = 0;
      while (axis < offset.size() && ++offset[axis] == width) offset[axis++] = 0;
      if (axis == offset.size()) break;
    }
    out.counts.push_back(count);
  }
  out.min = *std::min_element(out.counts.begin(), out.counts.end());
  out.mean = static_cast<double>(std::accumulate(out.counts.begin(), out.counts.end(), std::size_t{0})) /
             static_cast<double>(out.counts.size());
  return out;
}

}  // namespace percoldp
