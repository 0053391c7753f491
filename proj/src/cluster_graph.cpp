#include "percoldp/cluster_graph.hpp"

#include "percoldp/error.hpp"

namespace percoldp {

GiantCluster::GiantCluster(Environment env, ClusterLabeling labels)
    : env_(std::move(env)), labels_(std::move(labels)), dirs_(env_.lattice().direction_count()) {
  const LatticeTorus& lat = env_.lattice();
  if (labels_.label.size() != lat.site_count()) throw ParameterError("labeling does not match environment");
  local_.assign(lat.site_count(), kClosed);
  sites_.reserve(labels_.giant_size());
  for (std::size_t s = 0; s < lat.site_count(); ++s) {
    if (!labels_.in_giant(s)) continue;
    local_[s] = static_cast<std::int32_t>(sites_.size());
    sites_.push_back(s);
  }
  nbr_.assign(sites_.size() * static_cast<std::size_t>(dirs_), kClosed);
  degree_.assign(sites_.size(), 0);
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    for (int k = 0; k < dirs_; ++k) {
      if (!env_.open(sites_[i], k)) continue;
      const std::int32_t j = local_[lat.neighbor(sites_[i], k)];
      if (j == kClosed) throw ConsistencyError("open edge leaves the giant cluster");
      nbr_[i * static_cast<std::size_t>(dirs_) + static_cast<std::size_t>(k)] = j;
      ++degree_[i];
      ++directed_edges_;
    }
  }
}

ClusterPtr make_cluster(Environment env) {
  ClusterLabeling labels = label_clusters(env);
  return std::make_shared<const GiantCluster>(std::move(env), std::move(labels));
}

ClusterPtr make_cluster(Environment env, ClusterLabeling labels) {
  return std::make_shared<const GiantCluster>(std::move(env), std::move(labels));
}

}  // namespace percoldp
