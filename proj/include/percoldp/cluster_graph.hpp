#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "percoldp/clusters.hpp"
#include "percoldp/environment.hpp"

namespace percoldp {

/// The giant cluster as a graph with dense local numbering. This is the
/// periodized stand-in for the infinite cluster; kernels, measures and
/// gradient fields are all stored as (local site, direction) tables over it.
class GiantCluster {
 public:
  static constexpr std::int32_t kClosed = -1;

  GiantCluster(Environment env, ClusterLabeling labels);

  const Environment& env() const noexcept { return env_; }
  const ClusterLabeling& labels() const noexcept { return labels_; }
  const LatticeTorus& lattice() const noexcept { return env_.lattice(); }

  std::size_t size() const noexcept { return sites_.size(); }
  int directions() const noexcept { return dirs_; }
  std::size_t slots() const noexcept { return sites_.size() * static_cast<std::size_t>(dirs_); }

  std::size_t site(std::size_t local) const noexcept { return sites_[local]; }
  std::optional<std::size_t> local(std::size_t site) const noexcept {
    const auto v = local_[site];
    if (v < 0) return std::nullopt;
    return static_cast<std::size_t>(v);
  }

  /// Local index of the neighbor across an open edge, kClosed otherwise.
  std::int32_t neighbor(std::size_t local, int dir) const noexcept {
    return nbr_[local * static_cast<std::size_t>(dirs_) + static_cast<std::size_t>(dir)];
  }
  bool open(std::size_t local, int dir) const noexcept { return neighbor(local, dir) != kClosed; }
  int degree(std::size_t local) const noexcept { return degree_[local]; }
  std::size_t open_edge_count() const noexcept { return directed_edges_; }

  /// Local index of the lattice origin, if it is in the giant cluster.
  std::optional<std::size_t> origin() const noexcept { return local(0); }
  /// Origin when present, otherwise the smallest giant site.
  std::size_t anchor() const noexcept { return origin().value_or(0); }

 private:
  Environment env_;
  ClusterLabeling labels_;
  int dirs_;
  std::vector<std::size_t> sites_;
  std::vector<std::int32_t> local_;
  std::vector<std::int32_t> nbr_;
  std::vector<int> degree_;
  std::size_t directed_edges_ = 0;
};

using ClusterPtr = std::shared_ptr<const GiantCluster>;

ClusterPtr make_cluster(Environment env);
ClusterPtr make_cluster(Environment env, ClusterLabeling labels);

}  // namespace percoldp
