#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "percoldp/transfer_spectral.hpp"
#include "percoldp/walk_kernel.hpp"

namespace percoldp {

/// Edge field G(x, e) on the open edges of the giant cluster, stored as a
/// slot table (closed slots hold 0).
class GradientField {
 public:
  enum class Provenance { kPotential, kLoaded };

  GradientField(ClusterPtr cluster, std::vector<double> values, Provenance provenance,
                std::vector<double> centering = {});

  const ClusterPtr& cluster() const noexcept { return cluster_; }
  const GiantCluster& graph() const noexcept { return *cluster_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator()(std::size_t local, int dir) const noexcept {
    return values_[local * static_cast<std::size_t>(cluster_->directions()) + static_cast<std::size_t>(dir)];
  }
  Provenance provenance() const noexcept { return provenance_; }
  /// Per-axis constant c subtracted by from_potential: G = dg - <c, e>.
  /// Zero for fields built any other way.
  std::span<const double> centering() const noexcept { return centering_; }
  /// max |G|.
  double bound() const noexcept { return bound_; }

 private:
  ClusterPtr cluster_;
  std::vector<double> values_;
  Provenance provenance_;
  std::vector<double> centering_;
  double bound_ = 0.0;
};

/// G(x, e) = g(x+e) - g(x) with no centering. Sums around every cycle of the
/// torus vanish, including winding ones.
GradientField exact_gradient(const ClusterPtr& cluster, std::span<const double> g);

/// The exact gradient of g minus its per-direction mean over giant-cluster
/// sites, so that every direction averages to zero. On the torus the
/// subtracted constant makes sums around winding cycles equal to
/// -L <c, winding>, while contractible cycles still sum to zero.
GradientField from_potential(const ClusterPtr& cluster, std::span<const double> g);

/// Wraps an externally supplied table without checks beyond shape.
GradientField load_field(const ClusterPtr& cluster, std::vector<double> values);

struct ValidationThresholds {
  double antisymmetry = 1e-9;
  double mean = 1e-10;
  double cycle = 1e-9;
};

struct ValidationReport {
  bool pass = false;
  double antisymmetry = 0.0;  // max |G(x,e) + G(x+e,-e)|
  double mean = 0.0;          // max over directions of |mean_x G(x, e)|
  double cycle = 0.0;         // max cycle residual after removing the period part
  double bound = 0.0;         // M = max |G|
  std::size_t cycles_checked = 0;
  std::vector<double> period;  // per-axis sum picked up by one winding
  std::string failure;         // first failed clause and the violating cycle
};

/// Checks antisymmetry (two-cycles), per-direction zero mean, and closed loops
/// on the fundamental cycles of a BFS spanning tree. Winding cycles of the
/// torus may carry a sum linear in their winding vector (the period); the
/// period is fitted by least squares and the cycle residual is what remains.
ValidationReport validate(const GradientField& G, const ValidationThresholds& thresholds = {});

/// Potential Psi with Psi(origin) = 0, defined on lifted points of Z^d.
class CorrectorPotential {
 public:
  const GradientField& field() const noexcept { return field_; }
  const GiantCluster& graph() const noexcept { return field_.graph(); }
  /// Psi on the BFS tree, per local site.
  std::span<const double> tree_values() const noexcept { return tree_; }
  std::span<const double> period() const noexcept { return period_; }
  /// Max |path sum - Psi difference| over the random-walk spot check.
  double path_error() const noexcept { return path_error_; }

  /// Psi at a lifted point; nullopt when the point is not in the giant cluster.
  std::optional<double> at(std::span<const std::int64_t> lifted) const;

 private:
  friend CorrectorPotential corrector(const GradientField&, std::uint64_t);
  explicit CorrectorPotential(GradientField field) : field_(std::move(field)) {}

  GradientField field_;
  std::vector<double> tree_;
  std::vector<std::int64_t> lift_;  // lifted coordinates per local site, row-major d-tuples
  std::vector<double> period_;
  double path_error_ = 0.0;
};

/// Psi by BFS accumulation of G from the origin. Path independence is spot
/// checked on 100 random walks of the lifted lattice (stream `seed`); a
/// discrepancy above 1e-9 raises ConsistencyError. Throws ParameterError when
/// the origin is outside the giant cluster or G fails validation.
CorrectorPotential corrector(const GradientField& G, std::uint64_t seed = 0);

/// max_x log sum_e pi(x,e) exp(f(x,e) + G(x,e)).
double lambda_value(const TransitionKernel& kernel, std::span<const double> f_table, const GradientField& G);

struct MinimizeOptions {
  double tol = 1e-9;  // target spread max_x l_x - min_x l_x
  int max_iter = 1000;
};

struct MinimizeResult {
  double value = 0.0;  // max_x l_x at the returned potential
  double lower = 0.0;  // min_x l_x; the minimum lies in [lower, value]
  std::vector<double> potential;  // g, zero at the anchor
  GradientField field;            // exact_gradient(potential)
  int iterations = 0;
};

/// min over potentials g of max_x l_x(g), l_x = log sum_e pi e^{f + g(x+e) - g(x)}.
/// The max is replaced by the softmax t log sum_x exp(l_x / t) and minimized
/// by Newton's method while t decreases geometrically, starting from g = 0.
/// Because min_x l_x <= optimum <= max_x l_x for every g, the spread is a
/// certificate; NumericError reports it when the descent stagnates.
MinimizeResult minimize_lambda(const TransitionKernel& kernel, std::span<const double> f_table,
                               const MinimizeOptions& opts = {});

/// from_potential(log v) for the Perron vector v of the tilted operator.
GradientField perron_field(const TransitionKernel& kernel, std::span<const double> f_table,
                           const PerronOptions& opts = {});

struct SublinearityRow {
  std::int64_t L = 0;
  std::int64_t n = 0;
  double max_psi_over_n = 0.0;
  double fraction_eps05 = 0.0;  // n^-d #{|x|_inf <= n : |Psi(x)| > 0.05 n}
  double fraction_eps10 = 0.0;
  double fitted_c_eps = 0.0;  // max over sampled prefixes of (-sum G - k * 0.1)^+
};

/// Rows for n = L/4 and n = L/2. `walks` simple-random-walk paths of length n
/// from the origin (stream `seed`) supply the path-sum bound.
std::vector<SublinearityRow> sublinearity_scan(const CorrectorPotential& psi, std::size_t walks = 100,
                                               std::uint64_t seed = 0);

/// CSV with header "L,n,max_psi_over_n,avg_fraction_eps05,avg_fraction_eps10,fitted_c_eps".
void write_scan_csv(const std::vector<SublinearityRow>& rows, std::ostream& out);

}  // namespace percoldp
