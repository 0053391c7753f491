#include "percoldp/pair_measure.hpp"

#include <cmath>
#include <ostream>

#include "linalg.hpp"
#include "percoldp/error.hpp"

namespace percoldp {
namespace {

std::size_t slot(const GiantCluster& c, std::size_t local, int dir) {
  return local * static_cast<std::size_t>(c.directions()) + static_cast<std::size_t>(dir);
}

void require_same_cluster(const PairMeasure& a, const PairMeasure& b) {
  if (a.cluster() != b.cluster()) throw ParameterError("measures live on different clusters");
}

}  // namespace

PairMeasure::PairMeasure(ClusterPtr cluster, std::vector<double> weights)
    : cluster_(std::move(cluster)), weights_(std::move(weights)) {
  if (!cluster_) throw ParameterError("pair measure needs a cluster");
  if (weights_.size() != cluster_->slots()) throw ParameterError("pair measure table has the wrong size");
  double total = 0.0;
  for (std::size_t i = 0; i < cluster_->size(); ++i)
    for (int k = 0; k < cluster_->directions(); ++k) {
      const double w = weights_[slot(*cluster_, i, k)];
      if (!std::isfinite(w) || w < 0.0) throw AdmissibilityError("pair measure has a negative or non-finite weight");
      if (w > 0.0 && !cluster_->open(i, k)) throw AdmissibilityError("pair measure puts mass on a closed edge");
      total += w;
    }
  if (std::abs(total - 1.0) > 1e-12)
    throw AdmissibilityError("pair measure has total mass " + std::to_string(total));
}

PairMeasure PairMeasure::mix(const PairMeasure& a, const PairMeasure& b, double x) {
  require_same_cluster(a, b);
  std::vector<double> w(a.weights_.size());
  for (std::size_t s = 0; s < w.size(); ++s) w[s] = x * a.weights_[s] + (1.0 - x) * b.weights_[s];
  return PairMeasure(a.cluster_, std::move(w));
}

PairMeasure pair_empirical(const Trajectory& traj) {
  if (traj.length() == 0) throw ParameterError("empirical measure of an empty trajectory");
  const GiantCluster& c = *traj.cluster;
  std::vector<std::uint64_t> counts(c.slots(), 0);
  std::size_t x = traj.start;
  for (const auto k : traj.steps) {
    ++counts[slot(c, x, k)];
    x = static_cast<std::size_t>(c.neighbor(x, k));
  }
  const double n = static_cast<double>(traj.length());
  std::vector<double> w(counts.size());
  for (std::size_t s = 0; s < w.size(); ++s) w[s] = static_cast<double>(counts[s]) / n;
  return PairMeasure(traj.cluster, std::move(w));
}

Marginals marginals(const PairMeasure& mu) {
  const GiantCluster& c = mu.graph();
  Marginals m{std::vector<double>(c.size(), 0.0), std::vector<double>(c.size(), 0.0)};
  for (std::size_t i = 0; i < c.size(); ++i)
    for (int k = 0; k < c.directions(); ++k) {
      const auto j = c.neighbor(i, k);
      if (j == GiantCluster::kClosed) continue;
      m.first[i] += mu(i, k);
      m.second[static_cast<std::size_t>(j)] += mu(i, k);
    }
  return m;
}

MembershipReport in_m1_star(const PairMeasure& mu, double tol) {
  const GiantCluster& c = mu.graph();
  const Marginals m = marginals(mu);
  MembershipReport r;
  for (std::size_t i = 0; i < c.size(); ++i) r.imbalance += std::abs(m.first[i] - m.second[i]);
  if (!(r.imbalance <= tol)) {
    r.violation = "marginals differ: |(mu)_1 - (mu)_2|_1 = " + std::to_string(r.imbalance);
    return r;
  }
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!(m.first[i] > 0.0)) continue;
    for (int k = 0; k < c.directions(); ++k)
      if (c.open(i, k) != (mu(i, k) > 0.0)) {
        r.violation = "support differs from the open edges at lattice site " + std::to_string(c.site(i)) +
                      ", direction " + std::to_string(k);
        return r;
      }
  }
  r.member = true;
  return r;
}

KernelDensityPair make_invariant_pair(const TransitionKernel& kernel) {
  auto phi = stationary(kernel);
  const double n = static_cast<double>(phi.size());
  for (auto& v : phi) v *= n;
  return KernelDensityPair{kernel, std::move(phi), true};
}

PairMeasure pair_from(const KernelDensityPair& kdp) {
  const GiantCluster& c = kdp.kernel.graph();
  if (!kdp.invariant) throw AdmissibilityError("pair_from needs an invariant density");
  if (kdp.density.size() != c.size()) throw ParameterError("density has the wrong size");
  const double n = static_cast<double>(c.size());
  std::vector<double> phi(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!(kdp.density[i] >= 0.0)) throw AdmissibilityError("density must be nonnegative");
    phi[i] = kdp.density[i] / n;
  }
  const double resid = detail::balance_residual(c, kdp.kernel.values(), phi);
  if (!(resid * n <= 1e-9))
    throw AdmissibilityError("density is not invariant for the kernel (balance residual " + std::to_string(resid * n) +
                             ")");
  std::vector<double> w(c.slots(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i)
    for (int k = 0; k < c.directions(); ++k) w[slot(c, i, k)] = kdp.kernel(i, k) * phi[i];
  return PairMeasure(kdp.kernel.cluster(), std::move(w));
}

KernelDensityPair kdp_from(const PairMeasure& mu) {
  const auto report = in_m1_star(mu);
  if (!report.member) throw AdmissibilityError("measure is not balanced: " + report.violation);
  const GiantCluster& c = mu.graph();
  const Marginals m = marginals(mu);
  const double n = static_cast<double>(c.size());
  std::vector<double> prob(c.slots(), 0.0);
  std::vector<double> phi(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!(m.first[i] > 0.0))
      throw AdmissibilityError("balanced measure leaves lattice site " + std::to_string(c.site(i)) + " without mass");
    for (int k = 0; k < c.directions(); ++k) prob[slot(c, i, k)] = mu(i, k) / m.first[i];
    phi[i] = m.first[i] * n;
  }
  return KernelDensityPair{TransitionKernel(mu.cluster(), std::move(prob)), std::move(phi), true};
}

PairMeasure stationary_pair(const TransitionKernel& kernel) { return pair_from(make_invariant_pair(kernel)); }

PairMeasure random_balanced(const ClusterPtr& cluster, CounterRng& rng) {
  const GiantCluster& c = *cluster;
  const int d = c.lattice().dim();
  std::vector<double> w(c.slots(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i)
    for (int axis = 0; axis < d; ++axis) {
      const auto j = c.neighbor(i, axis);
      if (j == GiantCluster::kClosed) continue;
      const double v = 0.5 + rng.uniform();
      w[slot(c, i, axis)] += v;
      w[slot(c, static_cast<std::size_t>(j), axis + d)] += v;
    }
  // Plaquette x -> x+e1 -> x+e1+e2 -> x+e2 -> x, in either orientation.
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto a = c.neighbor(i, 0);
    const auto b = c.neighbor(i, 1);
    if (a == GiantCluster::kClosed || b == GiantCluster::kClosed) continue;
    const auto ab = c.neighbor(static_cast<std::size_t>(a), 1);
    if (ab == GiantCluster::kClosed || c.neighbor(static_cast<std::size_t>(b), 0) != ab) continue;
    const double v = rng.uniform();
    const bool forward = rng.uniform() < 0.5;
    const std::size_t x = i;
    const auto ua = static_cast<std::size_t>(a);
    const auto ub = static_cast<std::size_t>(b);
    const auto uab = static_cast<std::size_t>(ab);
    if (forward) {
      w[slot(c, x, 0)] += v;
      w[slot(c, ua, 1)] += v;
      w[slot(c, uab, d)] += v;
      w[slot(c, ub, 1 + d)] += v;
    } else {
      w[slot(c, x, 1)] += v;
      w[slot(c, ub, 0)] += v;
      w[slot(c, uab, 1 + d)] += v;
      w[slot(c, ua, d)] += v;
    }
  }
  double total = 0.0;
  for (const double v : w) total += v;
  for (auto& v : w) v /= total;
  return PairMeasure(cluster, std::move(w));
}

double total_variation(const PairMeasure& a, const PairMeasure& b) {
  require_same_cluster(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.weights().size(); ++i) s += std::abs(a.weights()[i] - b.weights()[i]);
  return 0.5 * s;
}

double expectation(const PairMeasure& mu, std::span<const double> f_table) {
  if (f_table.size() != mu.weights().size()) throw ParameterError("f table has the wrong size");
  double s = 0.0;
  for (std::size_t i = 0; i < f_table.size(); ++i)
    if (mu.weights()[i] > 0.0) s += mu.weights()[i] * f_table[i];
  return s;
}

ErgodicAverage ergodic_average(const TransitionKernel& kernel, const TestFunction& f, std::size_t n,
                               std::uint64_t stream_seed, std::size_t batches) {
  if (n == 0) throw ParameterError("ergodic average needs n >= 1");
  if (batches < 2 || batches > n) throw ParameterError("batch count must lie in [2, n]");
  const GiantCluster& c = kernel.graph();
  const auto table = f.tabulate(c);

  std::vector<double> batch_sum(batches, 0.0);
  std::vector<std::size_t> batch_len(batches, 0);
  CounterRng rng(stream_seed);
  std::size_t x = c.anchor();
  double total = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const int k = sample_step(kernel, x, rng.uniform());
    const double v = table[slot(c, x, k)];
    const std::size_t b = t * batches / n;
    batch_sum[b] += v;
    ++batch_len[b];
    total += v;
    x = static_cast<std::size_t>(c.neighbor(x, k));
  }

  ErgodicAverage out;
  out.time_average = total / static_cast<double>(n);
  double var = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    const double dev = batch_sum[b] / static_cast<double>(batch_len[b]) - out.time_average;
    var += dev * dev;
  }
  var /= static_cast<double>(batches - 1);
  out.batch_sigma = std::sqrt(var / static_cast<double>(batches));

  const auto phi = stationary(kernel);
  double e = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (int k = 0; k < c.directions(); ++k)
      if (c.open(i, k)) e += phi[i] * kernel(i, k) * table[slot(c, i, k)];
  out.stationary_expectation = e;
  out.gap = std::abs(out.time_average - e);
  return out;
}

void write_pair_csv(const PairMeasure& mu, std::ostream& out) {
  const GiantCluster& c = mu.graph();
  out << "site_index,direction_index,weight\n";
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < c.size(); ++i)
    for (int k = 0; k < c.directions(); ++k)
      if (mu(i, k) > 0.0) out << c.site(i) << ',' << k << ',' << mu(i, k) << '\n';
  out.precision(old);
}

}  // namespace percoldp
