#include "percoldp/rate_functional.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "linalg.hpp"
#include "percoldp/error.hpp"
#include "percoldp/parallel.hpp"

namespace percoldp {
namespace {

std::size_t slot(const GiantCluster& c, std::size_t local, int dir) {
  return local * static_cast<std::size_t>(c.directions()) + static_cast<std::size_t>(dir);
}

// log sum_e exp(a[x, e]) over open edges of site x.
double site_logsumexp(const GiantCluster& c, std::size_t x, std::span<const double> a) {
  double top = -INFINITY;
  for (int k = 0; k < c.directions(); ++k)
    if (c.open(x, k)) top = std::max(top, a[slot(c, x, k)]);
  double s = 0.0;
  for (int k = 0; k < c.directions(); ++k)
    if (c.open(x, k)) s += std::exp(a[slot(c, x, k)] - top);
  return top + std::log(s);
}

std::vector<double> linear_tilt(const GiantCluster& c, std::span<const double> theta) {
  return TestFunction::linear({theta.begin(), theta.end()}).tabulate(c);
}

}  // namespace

RateValue entropy_I(const PairMeasure& mu, const TransitionKernel& reference, double balance_tol) {
  if (mu.cluster() != reference.cluster()) throw ParameterError("measure and kernel live on different clusters");
  RateValue out;
  if (!in_m1_star(mu, balance_tol).member) {
    out.infinite = true;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  const GiantCluster& c = mu.graph();
  const Marginals m = marginals(mu);
  double total = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (int k = 0; k < c.directions(); ++k) {
      const double w = mu(i, k);
      if (w > 0.0) total += w * std::log(w / (m.first[i] * reference(i, k)));
    }
  out.value = total;
  out.witness = mu;
  return out;
}

HBarResult h_bar(const TransitionKernel& reference, std::span<const double> f_table, const HBarOptions& opts) {
  const GiantCluster& c = reference.graph();
  if (f_table.size() != c.slots()) throw ParameterError("f table has the wrong size");
  if (opts.warm_start && opts.warm_start->cluster() != reference.cluster())
    throw ParameterError("warm-start kernel lives on a different cluster");

  // Unnormalized log-weights log pi + f of the optimal tilt.
  std::vector<double> base(c.slots(), 0.0);
  for (std::size_t s = 0; s < base.size(); ++s)
    if (reference.values()[s] > 0.0) base[s] = std::log(reference.values()[s]) + f_table[s];

  TransitionKernel kernel = opts.warm_start ? *opts.warm_start : reference;
  std::vector<double> reward(c.size());
  std::vector<double> logits(c.slots(), 0.0);
  double resid = INFINITY;
  double last_change = INFINITY;
  for (int iter = 0; iter <= opts.max_iter; ++iter) {
    const auto phi = detail::solve_stationary(c, kernel.values());
    double value = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      double r = 0.0;
      for (int k = 0; k < c.directions(); ++k) {
        const double q = kernel(i, k);
        if (q > 0.0) r += q * (base[slot(c, i, k)] - std::log(q));
      }
      reward[i] = r;
      value += phi[i] * r;
    }
    for (auto& r : reward) r -= value;
    const auto h = detail::solve_poisson(c, kernel.values(), reward, c.anchor());

    resid = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (int k = 0; k < c.directions(); ++k) {
        const auto j = c.neighbor(i, k);
        if (j != GiantCluster::kClosed) logits[slot(c, i, k)] = base[slot(c, i, k)] + h[static_cast<std::size_t>(j)];
      }
      resid = std::max(resid, std::abs(site_logsumexp(c, i, logits) - h[i] - value));
    }
    // The residual is second order in the policy error, so also require the
    // previous improvement step to have been small.
    if (resid <= opts.tol && last_change <= std::sqrt(opts.tol)) {
      std::vector<double> w(c.slots(), 0.0);
      for (std::size_t i = 0; i < c.size(); ++i)
        for (int k = 0; k < c.directions(); ++k) w[slot(c, i, k)] = kernel(i, k) * phi[i];
      PairMeasure witness(kernel.cluster(), std::move(w));
      return HBarResult{value, std::move(witness), std::move(kernel), h, resid, iter};
    }

    std::vector<double> prob(c.slots(), 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double lse = site_logsumexp(c, i, logits);
      for (int k = 0; k < c.directions(); ++k)
        if (c.open(i, k)) prob[slot(c, i, k)] = std::exp(logits[slot(c, i, k)] - lse);
      double total = 0.0;
      for (int k = 0; k < c.directions(); ++k) total += prob[slot(c, i, k)];
      for (int k = 0; k < c.directions(); ++k) prob[slot(c, i, k)] /= total;
    }
    last_change = 0.0;
    for (std::size_t s = 0; s < prob.size(); ++s) last_change = std::max(last_change, std::abs(prob[s] - kernel.values()[s]));
    kernel = TransitionKernel(reference.cluster(), std::move(prob));
  }
  throw ConvergenceError("h_bar policy iteration did not converge", resid);
}

HBarResult h_bar(const TransitionKernel& reference, const TestFunction& f, const HBarOptions& opts) {
  return h_bar(reference, f.tabulate(reference.graph()), opts);
}

std::vector<double> xi_contraction(const PairMeasure& mu) {
  const GiantCluster& c = mu.graph();
  const int d = c.lattice().dim();
  std::vector<double> xi(static_cast<std::size_t>(d), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i)
    for (int k = 0; k < c.directions(); ++k) {
      const double w = mu(i, k);
      if (w == 0.0) continue;
      xi[static_cast<std::size_t>(k < d ? k : k - d)] += k < d ? w : -w;
    }
  return xi;
}

std::vector<std::vector<double>> box_grid(int dim, double half_width, std::size_t count) {
  if (dim < 1 || count == 0) throw ParameterError("grid needs dim >= 1 and count >= 1");
  if (!(half_width >= 0.0)) throw ParameterError("grid half width must be nonnegative");
  std::vector<double> axis(count, 0.0);
  for (std::size_t i = 0; i < count && count > 1; ++i)
    axis[i] = -half_width + 2.0 * half_width * static_cast<double>(i) / static_cast<double>(count - 1);
  std::size_t total = 1;
  for (int a = 0; a < dim; ++a) total *= count;
  std::vector<std::vector<double>> out(total, std::vector<double>(static_cast<std::size_t>(dim)));
  for (std::size_t p = 0; p < total; ++p) {
    std::size_t rest = p;
    for (int a = dim - 1; a >= 0; --a) {
      out[p][static_cast<std::size_t>(a)] = axis[rest % count];
      rest /= count;
    }
  }
  return out;
}

LevelOneCurve level1_rate(const TransitionKernel& reference, const std::vector<std::vector<double>>& theta_grid,
                          const std::vector<std::vector<double>>& x_grid) {
  const GiantCluster& c = reference.graph();
  const auto d = static_cast<std::size_t>(c.lattice().dim());
  if (theta_grid.empty()) throw ParameterError("tilt grid is empty");
  for (const auto& t : theta_grid)
    if (t.size() != d) throw ParameterError("tilt grid point has the wrong dimension");
  for (const auto& x : x_grid)
    if (x.size() != d) throw ParameterError("velocity grid point has the wrong dimension");

  LevelOneCurve curve;
  curve.theta = theta_grid;
  curve.x = x_grid;
  curve.hbar.assign(theta_grid.size(), 0.0);
  parallel_for(theta_grid.size(), [&](std::size_t i) {
    curve.hbar[i] = h_bar(reference, linear_tilt(c, theta_grid[i])).value;
  });

  std::vector<double> lo(d, INFINITY), hi(d, -INFINITY);
  for (const auto& t : theta_grid)
    for (std::size_t a = 0; a < d; ++a) {
      lo[a] = std::min(lo[a], t[a]);
      hi[a] = std::max(hi[a], t[a]);
    }

  for (const auto& x : x_grid) {
    double best = -INFINITY;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < theta_grid.size(); ++i) {
      double v = -curve.hbar[i];
      for (std::size_t a = 0; a < d; ++a) v += theta_grid[i][a] * x[a];
      if (v > best) {
        best = v;
        arg = i;
      }
    }
    bool sat = false;
    for (std::size_t a = 0; a < d; ++a)
      if (hi[a] > lo[a] && (theta_grid[arg][a] == lo[a] || theta_grid[arg][a] == hi[a])) sat = true;
    curve.J.push_back(best);
    curve.argmax.push_back(arg);
    curve.saturated.push_back(sat);
  }
  return curve;
}

ConstrainedRate constrained_rate(const TransitionKernel& reference, std::span<const double> x, double tol,
                                 int max_iter) {
  const GiantCluster& c = reference.graph();
  const auto d = static_cast<Eigen::Index>(c.lattice().dim());
  if (x.size() != static_cast<std::size_t>(d)) throw ParameterError("velocity has the wrong dimension");
  Eigen::Map<const Eigen::VectorXd> target(x.data(), d);

  auto solve_at = [&](const Eigen::VectorXd& theta, const TransitionKernel* warm) {
    HBarOptions o;
    o.warm_start = warm;
    return h_bar(reference, linear_tilt(c, std::span<const double>(theta.data(), static_cast<std::size_t>(d))), o);
  };
  auto gradient = [&](const HBarResult& r) {
    const auto xi = xi_contraction(r.witness);
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(xi.data(), d) - target);
  };

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  HBarResult cur = solve_at(theta, nullptr);
  constexpr double kStep = 1e-4;
  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::VectorXd g = gradient(cur);
    if (g.lpNorm<Eigen::Infinity>() <= tol) {
      const auto xi = xi_contraction(cur.witness);
      const double value = entropy_I(cur.witness, reference).value;
      return ConstrainedRate{value, {theta.data(), theta.data() + d}, xi, cur.witness, iter};
    }
    // Hessian of the dual by central differences of its gradient.
    Eigen::MatrixXd hess(d, d);
    for (Eigen::Index a = 0; a < d; ++a) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp[a] += kStep;
      tm[a] -= kStep;
      hess.col(a) = (gradient(solve_at(tp, &cur.kernel)) - gradient(solve_at(tm, &cur.kernel))) / (2.0 * kStep);
    }
    hess = 0.5 * (hess + hess.transpose());
    Eigen::VectorXd step = -hess.ldlt().solve(g);
    if (!step.allFinite()) throw NumericError("constrained rate: singular dual Hessian");
    // Backtrack on the gradient norm: near the solution the dual value
    // changes below rounding while its gradient is still resolvable.
    const double g0 = g.norm();
    double t = 1.0;
    for (;; t *= 0.5) {
      if (t < 1e-6) throw ConvergenceError("constrained rate: Newton step stalled; velocity may be unreachable", g0);
      Eigen::VectorXd trial = theta + t * step;
      HBarResult next = solve_at(trial, &cur.kernel);
      if (gradient(next).norm() <= (1.0 - 1e-4 * t) * g0) {
        theta = trial;
        cur = std::move(next);
        break;
      }
    }
  }
  throw ConvergenceError("constrained rate: Newton iteration did not converge", gradient(cur).lpNorm<Eigen::Infinity>());
}

ConvexityReport convexity_probe(const TransitionKernel& reference, std::size_t trials, CounterRng& rng) {
  if (trials == 0) throw ParameterError("convexity probe needs at least one trial");
  ConvexityReport report;
  report.trials = trials;
  report.max_violation = -INFINITY;
  for (std::size_t t = 0; t < trials; ++t) {
    const PairMeasure mu = random_balanced(reference.cluster(), rng);
    const PairMeasure nu = random_balanced(reference.cluster(), rng);
    const double x = rng.uniform();
    const double lhs = entropy_I(PairMeasure::mix(mu, nu, x), reference).value;
    const double rhs = x * entropy_I(mu, reference).value + (1.0 - x) * entropy_I(nu, reference).value;
    const double v = lhs - rhs;
    report.max_violation = std::max(report.max_violation, v);
    if (v > 1e-12) ++report.violations;
  }
  return report;
}

void write_level1_csv(const LevelOneCurve& curve, std::ostream& out) {
  const std::size_t d = curve.x.empty() ? 0 : curve.x.front().size();
  for (std::size_t a = 0; a < d; ++a) out << 'x' << a + 1 << ',';
  out << "J\n";
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < curve.x.size(); ++i) {
    for (const double v : curve.x[i]) out << v << ',';
    out << curve.J[i] << '\n';
  }
  out.precision(old);
}

void write_hbar_csv(const LevelOneCurve& curve, std::ostream& out) {
  const std::size_t d = curve.theta.empty() ? 0 : curve.theta.front().size();
  for (std::size_t a = 0; a < d; ++a) out << "theta" << a + 1 << ',';
  out << "hbar\n";
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < curve.theta.size(); ++i) {
    for (const double v : curve.theta[i]) out << v << ',';
    out << curve.hbar[i] << '\n';
  }
  out.precision(old);
}

}  // namespace percoldp
