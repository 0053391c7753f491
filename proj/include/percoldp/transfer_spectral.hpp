#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "percoldp/walk_kernel.hpp"

namespace percoldp {

/// Nonnegative operator (Mv)(x) = sum_e kernel(x,e) exp(f(x,e)) v(x+e) over
/// the giant cluster.
class TiltedOperator {
 public:
  TiltedOperator(ClusterPtr cluster, std::vector<double> weights);

  const ClusterPtr& cluster() const noexcept { return cluster_; }
  const GiantCluster& graph() const noexcept { return *cluster_; }
  std::size_t size() const noexcept { return cluster_->size(); }
  std::span<const double> weights() const noexcept { return weights_; }
  double weight(std::size_t local, int dir) const noexcept {
    return weights_[local * static_cast<std::size_t>(cluster_->directions()) + static_cast<std::size_t>(dir)];
  }
  double row_sum(std::size_t local) const noexcept;

  void apply(std::span<const double> v, std::span<double> out) const;

 private:
  ClusterPtr cluster_;
  std::vector<double> weights_;
};

TiltedOperator build_tilted(const TransitionKernel& kernel, const TestFunction& f);
TiltedOperator build_tilted(const TransitionKernel& kernel, std::span<const double> f_table);

struct PerronOptions {
  /// Stop when |Mv - rho v|_inf <= tol * rho * |v|_inf, or earlier when the
  /// Collatz-Wielandt bounds satisfy (max - min) <= tol * max.
  double tol = 1e-12;
  int max_iter = 100;
  bool record_trace = false;
  /// Optional positive starting vector.
  std::span<const double> initial = {};
};

struct PerronResult {
  double log_rho = 0.0;
  std::vector<double> vector;  // right eigenvector, max entry 1, strictly positive
  double residual = 0.0;       // |Mv - rho v|_inf / |v|_inf
  double lower = 0.0;          // Collatz-Wielandt bounds on rho
  double upper = 0.0;
  int iterations = 0;
  std::vector<std::pair<int, double>> trace;  // (iteration, relative residual)
};

/// Perron root by Noda's shifted inverse power iteration: each step solves
/// (sigma I - M) y = v with sigma the current upper Collatz-Wielandt bound,
/// which keeps every iterate positive and converges superlinearly.
PerronResult log_perron(const TiltedOperator& op, const PerronOptions& opts = {});

void write_trace_csv(const PerronResult& result, std::ostream& out);

/// (1/n) log (M^n 1)(start), accumulated with per-step max normalization.
double finite_n_mgf(const TiltedOperator& op, std::size_t start, std::size_t n);

/// finite_n_mgf at every n in `horizons` (any order) in a single sweep.
std::vector<double> finite_n_mgf_at(const TiltedOperator& op, std::size_t start, std::span<const std::size_t> horizons);

/// Invariant site distribution of an admissible kernel (sums to 1). Solved
/// directly by sparse LU; throws NumericError if the balance residual
/// max_x |(phi K)(x) - phi(x)| exceeds tol.
std::vector<double> stationary(const TransitionKernel& kernel, double tol = 1e-12);

struct McMgfOptions {
  std::uint64_t step_budget = 4'000'000'000ULL;  // cap on n * samples
  std::size_t start = SIZE_MAX;                  // local site; default is the cluster anchor
};

struct McMgfResult {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// (1/n) log of the sample mean of exp(sum_k f) over independent
/// trajectories; trajectory i uses stream derive_seed(master_seed, i).
/// Standard error by the delta method.
McMgfResult mc_mgf(const TransitionKernel& kernel, const TestFunction& f, std::size_t n, std::size_t samples,
                   std::uint64_t master_seed, const McMgfOptions& opts = {});

}  // namespace percoldp
