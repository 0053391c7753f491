#include "percoldp/transfer_spectral.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "linalg.hpp"
#include "percoldp/error.hpp"
#include "percoldp/parallel.hpp"

namespace percoldp {
namespace {

std::size_t slot(const GiantCluster& c, std::size_t local, int dir) {
  return local * static_cast<std::size_t>(c.directions()) + static_cast<std::size_t>(dir);
}

// Every site reaches the anchor and is reached from it through positive weights.
void require_irreducible(const TiltedOperator& op) {
  const GiantCluster& c = op.graph();
  const std::size_t n = c.size();
  std::vector<std::vector<std::size_t>> reverse(n);
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < c.directions(); ++k) {
      const auto j = c.neighbor(i, k);
      if (j != GiantCluster::kClosed && op.weight(i, k) > 0.0) reverse[static_cast<std::size_t>(j)].push_back(i);
    }
  auto reach = [&](bool forward) {
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{c.anchor()};
    seen[c.anchor()] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      auto visit = [&](std::size_t y) {
        if (!seen[y]) {
          seen[y] = 1;
          ++count;
          stack.push_back(y);
        }
      };
      if (forward) {
        for (int k = 0; k < c.directions(); ++k) {
          const auto j = c.neighbor(x, k);
          if (j != GiantCluster::kClosed && op.weight(x, k) > 0.0) visit(static_cast<std::size_t>(j));
        }
      } else {
        for (const std::size_t y : reverse[x]) visit(y);
      }
    }
    return count;
  };
  if (reach(true) != n || reach(false) != n)
    throw StructureError("tilted operator is reducible on the giant cluster");
}

struct Ratios {
  double lower;
  double upper;
};

Ratios collatz_wielandt(std::span<const double> mv, std::span<const double> v) {
  Ratios r{INFINITY, 0.0};
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double q = mv[i] / v[i];
    r.lower = std::min(r.lower, q);
    r.upper = std::max(r.upper, q);
  }
  return r;
}

}  // namespace

TiltedOperator::TiltedOperator(ClusterPtr cluster, std::vector<double> weights)
    : cluster_(std::move(cluster)), weights_(std::move(weights)) {
  if (!cluster_) throw ParameterError("operator needs a cluster");
  if (weights_.size() != cluster_->slots()) throw ParameterError("operator weight table has the wrong size");
  for (std::size_t i = 0; i < cluster_->size(); ++i)
    for (int k = 0; k < cluster_->directions(); ++k) {
      const double w = weights_[slot(*cluster_, i, k)];
      if (!std::isfinite(w) || w < 0.0) throw NumericError("operator weight is negative or not finite");
      if (!cluster_->open(i, k) && w != 0.0) throw ParameterError("operator weight on a closed edge");
    }
}

double TiltedOperator::row_sum(std::size_t local) const noexcept {
  double s = 0.0;
  for (int k = 0; k < cluster_->directions(); ++k) s += weight(local, k);
  return s;
}

void TiltedOperator::apply(std::span<const double> v, std::span<double> out) const {
  const GiantCluster& c = *cluster_;
  const int dirs = c.directions();
  for (std::size_t i = 0; i < c.size(); ++i) {
    double s = 0.0;
    for (int k = 0; k < dirs; ++k) {
      const auto j = c.neighbor(i, k);
      if (j != GiantCluster::kClosed) s += weights_[slot(c, i, k)] * v[static_cast<std::size_t>(j)];
    }
    out[i] = s;
  }
}

TiltedOperator build_tilted(const TransitionKernel& kernel, std::span<const double> f_table) {
  const GiantCluster& c = kernel.graph();
  if (f_table.size() != c.slots()) throw ParameterError("f table has the wrong size");
  std::vector<double> w(c.slots(), 0.0);
  for (std::size_t s = 0; s < w.size(); ++s) {
    const double p = kernel.values()[s];
    if (p > 0.0) w[s] = p * std::exp(f_table[s]);
  }
  return TiltedOperator(kernel.cluster(), std::move(w));
}

TiltedOperator build_tilted(const TransitionKernel& kernel, const TestFunction& f) {
  return build_tilted(kernel, f.tabulate(kernel.graph()));
}

PerronResult log_perron(const TiltedOperator& op, const PerronOptions& opts) {
  require_irreducible(op);
  const GiantCluster& c = op.graph();
  const std::size_t n = c.size();
  const auto en = static_cast<Eigen::Index>(n);

  std::vector<double> v(n, 1.0);
  if (!opts.initial.empty()) {
    if (opts.initial.size() != n) throw ParameterError("initial vector has the wrong size");
    for (std::size_t i = 0; i < n; ++i) {
      if (!(opts.initial[i] > 0.0) || !std::isfinite(opts.initial[i]))
        throw ParameterError("initial vector must be strictly positive");
      v[i] = opts.initial[i];
    }
  }
  std::vector<double> mv(n);

  PerronResult res;
  auto finish = [&](const Ratios& r) {
    const double top = *std::max_element(v.begin(), v.end());
    for (auto& x : v) x /= top;
    op.apply(v, mv);
    const double rho = 0.5 * (r.lower + r.upper);
    double resid = 0.0;
    for (std::size_t i = 0; i < n; ++i) resid = std::max(resid, std::abs(mv[i] - rho * v[i]));
    res.log_rho = std::log(rho);
    res.vector = v;
    res.residual = resid;
    res.lower = r.lower;
    res.upper = r.upper;
  };

  // sigma I - M shares the sparsity pattern of M plus the diagonal.
  detail::SparseMatrix a = detail::edge_matrix(c, op.weights(), 1.0);
  a = -a;
  std::vector<double*> diag(n);
  for (Eigen::Index col = 0; col < a.outerSize(); ++col)
    for (detail::SparseMatrix::InnerIterator it(a, col); it; ++it)
      if (it.row() == it.col()) diag[static_cast<std::size_t>(col)] = &it.valueRef();
  Eigen::SparseLU<detail::SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(a);

  Eigen::VectorXd rhs(en);
  for (int iter = 0;; ++iter) {
    op.apply(v, mv);
    const Ratios r = collatz_wielandt(mv, v);
    if (!(r.upper > 0.0) || !std::isfinite(r.upper)) throw NumericError("Perron iteration lost positivity");
    const double rho = 0.5 * (r.lower + r.upper);
    double top_v = 0.0;
    double resid = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      top_v = std::max(top_v, v[i]);
      resid = std::max(resid, std::abs(mv[i] - rho * v[i]));
    }
    resid /= top_v * rho;
    if (opts.record_trace) res.trace.emplace_back(iter, resid);
    res.iterations = iter;
    if (r.upper - r.lower <= opts.tol * r.upper || resid <= opts.tol) {
      finish(r);
      break;
    }
    if (iter >= opts.max_iter) throw ConvergenceError("Perron iteration did not converge", resid);

    const double sigma = r.upper * (1.0 + 1e-12);
    for (auto* d : diag) *d = sigma;
    lu.factorize(a);
    if (lu.info() != Eigen::Success) throw NumericError("Perron iteration: factorization of the shifted operator failed");
    for (std::size_t i = 0; i < n; ++i) rhs[static_cast<Eigen::Index>(i)] = v[i];
    const Eigen::VectorXd y = lu.solve(rhs);
    double top = 0.0;
    for (Eigen::Index i = 0; i < en; ++i) top = std::max(top, std::abs(y[i]));
    if (!(top > 0.0) || !std::isfinite(top)) throw NumericError("Perron iteration: shifted solve failed");
    for (std::size_t i = 0; i < n; ++i) {
      const double yi = y[static_cast<Eigen::Index>(i)] / top;
      // Exact arithmetic keeps y > 0; clamp entries that roundoff pushes below.
      v[i] = std::max(yi, 1e-300);
    }
  }
  return res;
}

void write_trace_csv(const PerronResult& result, std::ostream& out) {
  out << "iteration,residual\n";
  const auto old = out.precision(17);
  for (const auto& [it, r] : result.trace) out << it << ',' << r << '\n';
  out.precision(old);
}

std::vector<double> finite_n_mgf_at(const TiltedOperator& op, std::size_t start,
                                    std::span<const std::size_t> horizons) {
  if (start >= op.size()) throw ParameterError("start site is outside the giant cluster");
  std::vector<double> out(horizons.size(), 0.0);
  if (horizons.empty()) return out;
  std::vector<std::size_t> order(horizons.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (horizons[i] == 0) throw ParameterError("horizon must be positive");
    order[i] = i;
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return horizons[a] < horizons[b]; });

  std::vector<double> v(op.size(), 1.0);
  std::vector<double> next(op.size());
  double log_scale = 0.0;
  std::size_t t = 0;
  for (const std::size_t idx : order) {
    for (; t < horizons[idx]; ++t) {
      op.apply(v, next);
      const double top = *std::max_element(next.begin(), next.end());
      if (!(top > 0.0) || !std::isfinite(top)) throw NumericError("moment generating recursion lost finiteness");
      for (std::size_t i = 0; i < next.size(); ++i) v[i] = next[i] / top;
      log_scale += std::log(top);
    }
    if (!(v[start] > 0.0)) throw NumericError("moment generating recursion underflowed at the start site");
    out[idx] = (log_scale + std::log(v[start])) / static_cast<double>(horizons[idx]);
  }
  return out;
}

double finite_n_mgf(const TiltedOperator& op, std::size_t start, std::size_t n) {
  const std::size_t h[] = {n};
  return finite_n_mgf_at(op, start, h)[0];
}

std::vector<double> stationary(const TransitionKernel& kernel, double tol) {
  const GiantCluster& c = kernel.graph();
  auto phi = detail::solve_stationary(c, kernel.values());
  const double resid = detail::balance_residual(c, kernel.values(), phi);
  if (!(resid <= tol))
    throw NumericError("stationary distribution balance residual " + std::to_string(resid) + " exceeds tolerance");
  return phi;
}

McMgfResult mc_mgf(const TransitionKernel& kernel, const TestFunction& f, std::size_t n, std::size_t samples,
                   std::uint64_t master_seed, const McMgfOptions& opts) {
  if (n == 0 || samples < 2) throw ParameterError("mc_mgf needs n >= 1 and at least two samples");
  if (static_cast<long double>(n) * static_cast<long double>(samples) > static_cast<long double>(opts.step_budget))
    throw ParameterError("n * samples exceeds the step budget");
  const GiantCluster& c = kernel.graph();
  const std::size_t start = opts.start == SIZE_MAX ? c.anchor() : opts.start;
  if (start >= c.size()) throw ParameterError("start site is outside the giant cluster");
  const auto table = f.tabulate(c);

  std::vector<double> sums(samples, 0.0);
  parallel_for(samples, [&](std::size_t i) {
    CounterRng rng(derive_seed(master_seed, i));
    std::size_t x = start;
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const int k = sample_step(kernel, x, rng.uniform());
      s += table[slot(c, x, k)];
      x = static_cast<std::size_t>(c.neighbor(x, k));
    }
    sums[i] = s;
  });

  const double top = *std::max_element(sums.begin(), sums.end());
  double mean = 0.0;
  for (const double s : sums) mean += std::exp(s - top);
  mean /= static_cast<double>(samples);
  double var = 0.0;
  for (const double s : sums) {
    const double d = std::exp(s - top) - mean;
    var += d * d;
  }
  var /= static_cast<double>(samples - 1);
  const double nn = static_cast<double>(n);
  McMgfResult out;
  out.estimate = (top + std::log(mean)) / nn;
  out.std_error = std::sqrt(var / static_cast<double>(samples)) / mean / nn;
  return out;
}

}  // namespace percoldp
