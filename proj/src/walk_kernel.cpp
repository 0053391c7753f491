#include "percoldp/walk_kernel.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "percoldp/error.hpp"

namespace percoldp {
namespace {

std::size_t slot(const GiantCluster& c, std::size_t local, int dir) {
  return local * static_cast<std::size_t>(c.directions()) + static_cast<std::size_t>(dir);
}

// exp(w - max) normalized over the open edges of each site.
std::vector<double> normalize_log_weights(const GiantCluster& c, std::vector<double> logw) {
  const int dirs = c.directions();
  for (std::size_t i = 0; i < c.size(); ++i) {
    double top = -INFINITY;
    for (int k = 0; k < dirs; ++k)
      if (c.open(i, k)) top = std::max(top, logw[slot(c, i, k)]);
    double total = 0.0;
    for (int k = 0; k < dirs; ++k) {
      double& w = logw[slot(c, i, k)];
      w = c.open(i, k) ? std::exp(w - top) : 0.0;
      total += w;
    }
    for (int k = 0; k < dirs; ++k) logw[slot(c, i, k)] /= total;
  }
  return logw;
}

void require_walkable(const GiantCluster& c) {
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c.degree(i) == 0) throw ConsistencyError("giant-cluster site " + std::to_string(c.site(i)) + " has degree 0");
}

}  // namespace

bool is_admissible(const GiantCluster& cluster, std::span<const double> prob, std::string* why) {
  auto fail = [why](std::string msg) {
    if (why) *why = std::move(msg);
    return false;
  };
  if (prob.size() != cluster.slots()) return fail("kernel table has the wrong size");
  const int dirs = cluster.directions();
  for (std::size_t i = 0; i < cluster.size(); ++i) {
    double total = 0.0;
    for (int k = 0; k < dirs; ++k) {
      const double v = prob[slot(cluster, i, k)];
      if (!std::isfinite(v) || v < 0.0) return fail("negative or non-finite entry at local site " + std::to_string(i));
      if (cluster.open(i, k) != (v > 0.0))
        return fail("support differs from the open mask at local site " + std::to_string(i) + ", direction " +
                    std::to_string(k));
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) return fail("row " + std::to_string(i) + " sums to " + std::to_string(total));
  }
  return true;
}

TransitionKernel::TransitionKernel(ClusterPtr cluster, std::vector<double> prob)
    : cluster_(std::move(cluster)), prob_(std::move(prob)) {
  if (!cluster_) throw ParameterError("kernel needs a cluster");
  std::string why;
  if (!is_admissible(*cluster_, prob_, &why)) throw AdmissibilityError("inadmissible kernel: " + why);
}

TransitionKernel srw_kernel(const ClusterPtr& cluster) {
  require_walkable(*cluster);
  std::vector<double> prob(cluster->slots(), 0.0);
  for (std::size_t i = 0; i < cluster->size(); ++i)
    for (int k = 0; k < cluster->directions(); ++k)
      if (cluster->open(i, k)) prob[slot(*cluster, i, k)] = 1.0 / cluster->degree(i);
  return TransitionKernel(cluster, std::move(prob));
}

TransitionKernel beta_kernel(const ClusterPtr& cluster, double beta) {
  if (!(beta > 1.0)) throw ParameterError("beta must be > 1 (beta = 1 is srw_kernel)");
  require_walkable(*cluster);
  std::vector<double> prob(cluster->slots(), 0.0);
  for (std::size_t i = 0; i < cluster->size(); ++i) {
    double total = 0.0;
    for (int k = 0; k < cluster->directions(); ++k)
      if (cluster->open(i, k)) total += k == 0 ? beta : 1.0;
    for (int k = 0; k < cluster->directions(); ++k)
      if (cluster->open(i, k)) prob[slot(*cluster, i, k)] = (k == 0 ? beta : 1.0) / total;
  }
  return TransitionKernel(cluster, std::move(prob));
}

TransitionKernel tilt_from_table(const TransitionKernel& kernel, std::span<const double> f_table,
                                 std::span<const double> g) {
  const GiantCluster& c = kernel.graph();
  if (f_table.size() != c.slots()) throw ParameterError("f table has the wrong size");
  if (g.size() != c.size()) throw ParameterError("potential g must have one value per giant-cluster site");
  std::vector<double> logw(c.slots(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i)
    for (int k = 0; k < c.directions(); ++k) {
      const auto j = c.neighbor(i, k);
      if (j == GiantCluster::kClosed) continue;
      const std::size_t s = slot(c, i, k);
      logw[s] = std::log(kernel(i, k)) + f_table[s] + g[i] - g[static_cast<std::size_t>(j)];
    }
  return TransitionKernel(kernel.cluster(), normalize_log_weights(c, std::move(logw)));
}

TransitionKernel tilt_from_potential(const TransitionKernel& kernel, const TestFunction& f,
                                     std::span<const double> g) {
  return tilt_from_table(kernel, f.tabulate(kernel.graph()), g);
}

TransitionKernel random_kernel(const ClusterPtr& cluster, CounterRng& rng, double spread) {
  require_walkable(*cluster);
  std::vector<double> logw(cluster->slots(), 0.0);
  for (auto& w : logw) w = spread * (2.0 * rng.uniform() - 1.0);
  return TransitionKernel(cluster, normalize_log_weights(*cluster, std::move(logw)));
}

int sample_step(const TransitionKernel& kernel, std::size_t local, double u) noexcept {
  const int dirs = kernel.graph().directions();
  int last_open = -1;
  double acc = 0.0;
  for (int k = 0; k < dirs; ++k) {
    const double p = kernel(local, k);
    if (p <= 0.0) continue;
    last_open = k;
    acc += p;
    if (u < acc) return k;
  }
  return last_open;  // u beyond the rounded row sum
}

Trajectory simulate(const TransitionKernel& kernel, std::size_t start, std::size_t n, std::uint64_t stream_seed) {
  const GiantCluster& c = kernel.graph();
  if (start >= c.size()) throw ParameterError("start site is outside the kernel support");
  Trajectory traj{kernel.cluster(), start, {}};
  traj.steps.reserve(n);
  CounterRng rng(stream_seed);
  std::size_t x = start;
  for (std::size_t t = 0; t < n; ++t) {
    const int k = sample_step(kernel, x, rng.uniform());
    traj.steps.push_back(static_cast<std::uint8_t>(k));
    x = static_cast<std::size_t>(c.neighbor(x, k));
  }
  return traj;
}

std::vector<std::int64_t> Trajectory::displacement() const {
  const LatticeTorus& lat = cluster->lattice();
  std::vector<std::int64_t> disp(static_cast<std::size_t>(lat.dim()), 0);
  for (const auto k : steps) disp[static_cast<std::size_t>(lat.axis_of(k))] += lat.sign_of(k);
  return disp;
}

std::vector<std::size_t> Trajectory::sites() const {
  std::vector<std::size_t> out;
  out.reserve(steps.size() + 1);
  std::size_t x = start;
  out.push_back(x);
  for (const auto k : steps) {
    const auto j = cluster->neighbor(x, k);
    if (j == GiantCluster::kClosed) throw ConsistencyError("trajectory crosses a closed edge");
    x = static_cast<std::size_t>(j);
    out.push_back(x);
  }
  return out;
}

std::vector<double> mean_velocity(const Trajectory& traj) {
  if (traj.length() == 0) throw ParameterError("mean velocity of an empty trajectory is undefined");
  const auto disp = traj.displacement();
  std::vector<double> v(disp.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(disp[i]) / static_cast<double>(traj.length());
  return v;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  out << "step_index,direction_index\n";
  for (std::size_t t = 0; t < traj.steps.size(); ++t) out << t << ',' << static_cast<int>(traj.steps[t]) << '\n';
}

}  // namespace percoldp
