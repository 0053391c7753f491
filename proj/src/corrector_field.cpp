#include "percoldp/corrector_field.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>

#include "percoldp/error.hpp"

namespace percoldp {
namespace {

std::size_t slot(const GiantCluster& c, std::size_t local, int dir) {
  return local * static_cast<std::size_t>(c.directions()) + static_cast<std::size_t>(dir);
}

// BFS spanning tree from `root`: tree potential, lifted coordinates and the
// direction used to enter each site.
struct SpanningTree {
  std::vector<double> psi;
  std::vector<std::int64_t> lift;  // row-major d-tuples
  std::vector<std::int32_t> parent;
  std::vector<int> parent_dir;
};

SpanningTree spanning_tree(const GradientField& G, std::size_t root) {
  const GiantCluster& c = G.graph();
  const LatticeTorus& lat = c.lattice();
  const auto d = static_cast<std::size_t>(lat.dim());
  SpanningTree t;
  t.psi.assign(c.size(), 0.0);
  t.lift.assign(c.size() * d, 0);
  t.parent.assign(c.size(), GiantCluster::kClosed);
  t.parent_dir.assign(c.size(), -1);
  std::vector<char> seen(c.size(), 0);
  const Point origin = lat.coords(c.site(root));
  std::copy(origin.begin(), origin.end(), t.lift.begin() + static_cast<std::ptrdiff_t>(root * d));
  std::deque<std::size_t> queue{root};
  seen[root] = 1;
  while (!queue.empty()) {
    const std::size_t x = queue.front();
    queue.pop_front();
    for (int k = 0; k < c.directions(); ++k) {
      const auto j = c.neighbor(x, k);
      if (j == GiantCluster::kClosed || seen[static_cast<std::size_t>(j)]) continue;
      const auto y = static_cast<std::size_t>(j);
      seen[y] = 1;
      t.psi[y] = t.psi[x] + G(x, k);
      t.parent[y] = static_cast<std::int32_t>(x);
      t.parent_dir[y] = k;
      for (std::size_t a = 0; a < d; ++a) t.lift[y * d + a] = t.lift[x * d + a];
      t.lift[y * d + static_cast<std::size_t>(lat.axis_of(k))] += lat.sign_of(k);
      queue.push_back(y);
    }
  }
  return t;
}

std::vector<double> lse_rows(const GiantCluster& c, std::span<const double> logw, std::span<const double> g,
                             std::vector<double>* q) {
  std::vector<double> ell(c.size());
  for (std::size_t x = 0; x < c.size(); ++x) {
    double top = -INFINITY;
    for (int k = 0; k < c.directions(); ++k) {
      const auto j = c.neighbor(x, k);
      if (j != GiantCluster::kClosed) top = std::max(top, logw[slot(c, x, k)] + g[static_cast<std::size_t>(j)]);
    }
    double s = 0.0;
    for (int k = 0; k < c.directions(); ++k) {
      const auto j = c.neighbor(x, k);
      if (j == GiantCluster::kClosed) continue;
      const double e = std::exp(logw[slot(c, x, k)] + g[static_cast<std::size_t>(j)] - top);
      if (q) (*q)[slot(c, x, k)] = e;
      s += e;
    }
    if (q)
      for (int k = 0; k < c.directions(); ++k) (*q)[slot(c, x, k)] /= s;
    ell[x] = top + std::log(s) - g[x];
  }
  return ell;
}

}  // namespace

GradientField::GradientField(ClusterPtr cluster, std::vector<double> values, Provenance provenance,
                             std::vector<double> centering)
    : cluster_(std::move(cluster)), values_(std::move(values)), provenance_(provenance),
      centering_(std::move(centering)) {
  if (!cluster_) throw ParameterError("gradient field needs a cluster");
  if (values_.size() != cluster_->slots()) throw ParameterError("gradient field table has the wrong size");
  if (centering_.empty()) centering_.assign(static_cast<std::size_t>(cluster_->lattice().dim()), 0.0);
  for (std::size_t i = 0; i < cluster_->size(); ++i)
    for (int k = 0; k < cluster_->directions(); ++k) {
      const double v = values_[slot(*cluster_, i, k)];
      if (!std::isfinite(v)) throw NumericError("gradient field has a non-finite value");
      if (!cluster_->open(i, k) && v != 0.0) throw ParameterError("gradient field has a value on a closed edge");
      bound_ = std::max(bound_, std::abs(v));
    }
}

GradientField exact_gradient(const ClusterPtr& cluster, std::span<const double> g) {
  const GiantCluster& c = *cluster;
  if (g.size() != c.size()) throw ParameterError("potential must have one value per giant-cluster site");
  std::vector<double> v(c.slots(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i)
    for (int k = 0; k < c.directions(); ++k) {
      const auto j = c.neighbor(i, k);
      if (j != GiantCluster::kClosed) v[slot(c, i, k)] = g[static_cast<std::size_t>(j)] - g[i];
    }
  return GradientField(cluster, std::move(v), GradientField::Provenance::kPotential);
}

GradientField from_potential(const ClusterPtr& cluster, std::span<const double> g) {
  const GiantCluster& c = *cluster;
  const LatticeTorus& lat = c.lattice();
  const GradientField raw = exact_gradient(cluster, g);
  std::vector<double> v(raw.values().begin(), raw.values().end());
  std::vector<double> centering(static_cast<std::size_t>(lat.dim()), 0.0);
  for (int a = 0; a < lat.dim(); ++a) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c.open(i, a)) {
        sum += v[slot(c, i, a)];
        ++count;
      }
    const double ca = count ? sum / static_cast<double>(count) : 0.0;
    centering[static_cast<std::size_t>(a)] = ca;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c.open(i, a)) v[slot(c, i, a)] -= ca;
      if (c.open(i, a + lat.dim())) v[slot(c, i, a + lat.dim())] += ca;
    }
  }
  return GradientField(cluster, std::move(v), GradientField::Provenance::kPotential, std::move(centering));
}

GradientField load_field(const ClusterPtr& cluster, std::vector<double> values) {
  return GradientField(cluster, std::move(values), GradientField::Provenance::kLoaded);
}

ValidationReport validate(const GradientField& G, const ValidationThresholds& thresholds) {
  const GiantCluster& c = G.graph();
  const LatticeTorus& lat = c.lattice();
  const int d = lat.dim();
  ValidationReport r;
  r.bound = G.bound();
  auto fail = [&r](std::string msg) {
    if (r.failure.empty()) r.failure = std::move(msg);
  };

  for (std::size_t i = 0; i < c.size(); ++i)
    for (int k = 0; k < d; ++k) {
      const auto j = c.neighbor(i, k);
      if (j == GiantCluster::kClosed) continue;
      const double s = std::abs(G(i, k) + G(static_cast<std::size_t>(j), lat.opposite(k)));
      if (s > r.antisymmetry) {
        r.antisymmetry = s;
        if (s > thresholds.antisymmetry)
          fail("antisymmetry fails on the two-cycle at lattice site " + std::to_string(c.site(i)) + ", direction " +
               std::to_string(k));
      }
    }

  for (int k = 0; k < c.directions(); ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) sum += G(i, k);
    const double mean = std::abs(sum / static_cast<double>(c.size()));
    if (mean > r.mean) r.mean = mean;
    if (mean > thresholds.mean) fail("direction " + std::to_string(k) + " has nonzero mean " + std::to_string(mean));
  }

  // Fundamental cycles: each non-tree bond closes one.
  const SpanningTree tree = spanning_tree(G, c.anchor());
  const auto du = static_cast<std::size_t>(d);
  std::vector<double> residual;
  std::vector<std::int64_t> winding;
  std::vector<std::pair<std::size_t, int>> closing;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (int k = 0; k < d; ++k) {
      const auto j = c.neighbor(i, k);
      if (j == GiantCluster::kClosed) continue;
      const auto y = static_cast<std::size_t>(j);
      if ((tree.parent[y] == static_cast<std::int32_t>(i) && tree.parent_dir[y] == k) ||
          (tree.parent[i] == j && tree.parent_dir[i] == lat.opposite(k)))
        continue;
      residual.push_back(tree.psi[i] + G(i, k) - tree.psi[y]);
      for (std::size_t a = 0; a < du; ++a) {
        const std::int64_t step = a == static_cast<std::size_t>(k) ? 1 : 0;
        winding.push_back((tree.lift[i * du + a] + step - tree.lift[y * du + a]) / lat.side());
      }
      closing.emplace_back(i, k);
    }
  r.cycles_checked = residual.size() + c.open_edge_count() / 2;
  r.period.assign(du, 0.0);
  if (!residual.empty()) {
    const auto m = static_cast<Eigen::Index>(residual.size());
    Eigen::MatrixXd W(m, d);
    Eigen::VectorXd rv(m);
    for (Eigen::Index row = 0; row < m; ++row) {
      rv[row] = residual[static_cast<std::size_t>(row)];
      for (Eigen::Index a = 0; a < d; ++a)
        W(row, a) = static_cast<double>(winding[static_cast<std::size_t>(row) * du + static_cast<std::size_t>(a)]);
    }
    const Eigen::VectorXd beta = W.completeOrthogonalDecomposition().solve(rv);
    for (std::size_t a = 0; a < du; ++a) r.period[a] = beta[static_cast<Eigen::Index>(a)];
    const Eigen::VectorXd left = rv - W * beta;
    Eigen::Index worst = 0;
    r.cycle = left.cwiseAbs().maxCoeff(&worst);
    if (r.cycle > thresholds.cycle) {
      const auto [site, dir] = closing[static_cast<std::size_t>(worst)];
      fail("cycle closed by the edge at lattice site " + std::to_string(c.site(site)) + ", direction " +
           std::to_string(dir) + " sums to " + std::to_string(left[worst]));
    }
  }
  r.pass = r.failure.empty();
  return r;
}

std::optional<double> CorrectorPotential::at(std::span<const std::int64_t> lifted) const {
  const GiantCluster& c = graph();
  const LatticeTorus& lat = c.lattice();
  const auto d = static_cast<std::size_t>(lat.dim());
  if (lifted.size() != d) throw ParameterError("lifted point has the wrong dimension");
  const auto local = c.local(lat.site_of(lifted));
  if (!local) return std::nullopt;
  double v = tree_[*local];
  for (std::size_t a = 0; a < d; ++a) {
    const std::int64_t wind = (lifted[a] - lift_[*local * d + a]) / lat.side();
    v += period_[a] * static_cast<double>(wind);
  }
  return v;
}

CorrectorPotential corrector(const GradientField& G, std::uint64_t seed) {
  const GiantCluster& c = G.graph();
  const LatticeTorus& lat = c.lattice();
  const auto origin = c.origin();
  if (!origin) throw ParameterError("origin is not in the giant cluster");
  const ValidationReport report = validate(G);
  if (!report.pass) throw ParameterError("gradient field fails validation: " + report.failure);

  CorrectorPotential psi(G);
  SpanningTree tree = spanning_tree(G, *origin);
  psi.tree_ = std::move(tree.psi);
  psi.lift_ = std::move(tree.lift);
  psi.period_ = report.period;

  const auto d = static_cast<std::size_t>(lat.dim());
  const std::size_t length = 4 * static_cast<std::size_t>(lat.side());
  CounterRng rng(seed);
  for (int w = 0; w < 100; ++w) {
    Point pos(d, 0);
    std::size_t x = *origin;
    double sum = 0.0;
    for (std::size_t t = 0; t < length; ++t) {
      const auto k = static_cast<int>(rng.below(static_cast<std::uint64_t>(c.directions())));
      if (!c.open(x, k)) continue;
      sum += G(x, k);
      x = static_cast<std::size_t>(c.neighbor(x, k));
      pos[static_cast<std::size_t>(lat.axis_of(k))] += lat.sign_of(k);
      psi.path_error_ = std::max(psi.path_error_, std::abs(*psi.at(pos) - sum));
    }
  }
  if (psi.path_error_ > 1e-9)
    throw ConsistencyError("corrector is path dependent: discrepancy " + std::to_string(psi.path_error_));
  return psi;
}

double lambda_value(const TransitionKernel& kernel, std::span<const double> f_table, const GradientField& G) {
  const GiantCluster& c = kernel.graph();
  if (G.cluster() != kernel.cluster()) throw ParameterError("field and kernel live on different clusters");
  if (f_table.size() != c.slots()) throw ParameterError("f table has the wrong size");
  double best = -INFINITY;
  for (std::size_t x = 0; x < c.size(); ++x) {
    double top = -INFINITY;
    for (int k = 0; k < c.directions(); ++k)
      if (c.open(x, k)) top = std::max(top, std::log(kernel(x, k)) + f_table[slot(c, x, k)] + G(x, k));
    double s = 0.0;
    for (int k = 0; k < c.directions(); ++k)
      if (c.open(x, k)) s += std::exp(std::log(kernel(x, k)) + f_table[slot(c, x, k)] + G(x, k) - top);
    best = std::max(best, top + std::log(s));
  }
  return best;
}

MinimizeResult minimize_lambda(const TransitionKernel& kernel, std::span<const double> f_table,
                               const MinimizeOptions& opts) {
  const GiantCluster& c = kernel.graph();
  if (f_table.size() != c.slots()) throw ParameterError("f table has the wrong size");
  const std::size_t n = c.size();
  const std::size_t anchor = c.anchor();
  std::vector<double> logw(c.slots(), 0.0);
  for (std::size_t s = 0; s < logw.size(); ++s)
    if (kernel.values()[s] > 0.0) logw[s] = std::log(kernel.values()[s]) + f_table[s];

  // Free variables: every site except the anchor.
  auto var = [anchor](std::size_t x) -> Eigen::Index {
    if (x == anchor) return -1;
    return static_cast<Eigen::Index>(x < anchor ? x : x - 1);
  };
  const auto nv = static_cast<Eigen::Index>(n - 1);

  std::vector<double> g(n, 0.0);
  std::vector<double> q(c.slots(), 0.0);
  auto smoothed = [&](std::span<const double> ell, double t) {
    const double top = *std::max_element(ell.begin(), ell.end());
    double z = 0.0;
    for (const double v : ell) z += std::exp((v - top) / t);
    return top + t * std::log(z);
  };
  auto finish = [&](std::span<const double> ell, int iter) {
    const auto [lo, hi] = std::minmax_element(ell.begin(), ell.end());
    return MinimizeResult{*hi, *lo, g, exact_gradient(kernel.cluster(), g), iter};
  };

  double t = 1.0;
  constexpr double kMinT = 1e-15;
  int stalls = 0;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const auto ell = lse_rows(c, logw, g, &q);
    const auto [lo, hi] = std::minmax_element(ell.begin(), ell.end());
    if (*hi - *lo <= opts.tol || n == 1) return finish(ell, iter);

    // Softmax weights over sites.
    std::vector<double> w(n);
    double z = 0.0;
    for (std::size_t x = 0; x < n; ++x) z += (w[x] = std::exp((ell[x] - *hi) / t));
    for (auto& v : w) v /= z;

    // u = gradient; S = sum_x w_x (t Cov_x + a_x a_x^T) with a_x = q_x - delta_x.
    Eigen::VectorXd u = Eigen::VectorXd::Zero(nv);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n * static_cast<std::size_t>((c.directions() + 1) * (c.directions() + 1)));
    std::vector<std::pair<Eigen::Index, double>> a;
    std::vector<std::pair<Eigen::Index, double>> qx;
    for (std::size_t x = 0; x < n; ++x) {
      if (w[x] == 0.0) continue;
      a.clear();
      qx.clear();
      for (int k = 0; k < c.directions(); ++k) {
        const auto j = c.neighbor(x, k);
        if (j == GiantCluster::kClosed) continue;
        const Eigen::Index vj = var(static_cast<std::size_t>(j));
        if (vj >= 0) qx.emplace_back(vj, q[slot(c, x, k)]);
      }
      a = qx;
      if (var(x) >= 0) a.emplace_back(var(x), -1.0);
      for (const auto& [i, v] : a) u[i] += w[x] * v;
      for (const auto& [i, vi] : a)
        for (const auto& [j, vj] : a) trip.emplace_back(i, j, w[x] * vi * vj);
      for (const auto& [i, vi] : qx) {
        trip.emplace_back(i, i, w[x] * t * vi);
        for (const auto& [j, vj] : qx) trip.emplace_back(i, j, -w[x] * t * vi * vj);
      }
    }
    Eigen::SparseMatrix<double> S(nv, nv);
    S.setFromTriplets(trip.begin(), trip.end());

    // Newton step for (S - u u^T) / t by Sherman-Morrison, with
    // Levenberg-Marquardt damping when the system is near singular.
    Eigen::VectorXd p;
    double scale = 0.0;
    for (Eigen::Index i = 0; i < nv; ++i) scale = std::max(scale, S.coeff(i, i));
    for (double damp = 0.0;; damp = damp == 0.0 ? 1e-12 * scale : damp * 10.0) {
      if (damp > scale) throw NumericError("minimize_lambda: Newton system is singular");
      Eigen::SparseMatrix<double> A = S;
      if (damp > 0.0)
        for (Eigen::Index i = 0; i < nv; ++i) A.coeffRef(i, i) += damp;
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
      if (ldlt.info() != Eigen::Success) continue;
      const Eigen::VectorXd zv = ldlt.solve(u);
      const double denom = 1.0 - u.dot(zv);
      if (!zv.allFinite() || !(denom > 1e-10)) continue;
      p = -t * zv / denom;
      break;
    }

    const double decrement = -u.dot(p);
    const double phi0 = smoothed(ell, t);
    std::vector<double> trial(n);
    double alpha = 1.0;
    bool moved = false;
    for (; alpha > 1e-12; alpha *= 0.5) {
      for (std::size_t x = 0; x < n; ++x) trial[x] = var(x) >= 0 ? g[x] + alpha * p[var(x)] : 0.0;
      const double phi1 = smoothed(lse_rows(c, logw, trial, nullptr), t);
      if (phi1 <= phi0 - 1e-4 * alpha * decrement) {
        g = trial;
        moved = true;
        break;
      }
    }
    if (!moved || decrement <= 1e-3 * t) {
      if (!moved) ++stalls;
      if (t > kMinT)
        t = std::max(t * 0.2, kMinT);
      else if (stalls > 20)
        break;
    }
  }
  const auto ell = lse_rows(c, logw, g, nullptr);
  const auto [lo, hi] = std::minmax_element(ell.begin(), ell.end());
  throw NumericError("minimize_lambda stagnated with gap " + std::to_string(*hi - *lo) + " (max " +
                     std::to_string(*hi) + ", min " + std::to_string(*lo) + ")");
}

GradientField perron_field(const TransitionKernel& kernel, std::span<const double> f_table,
                           const PerronOptions& opts) {
  const PerronResult pr = log_perron(build_tilted(kernel, f_table), opts);
  std::vector<double> g(pr.vector.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::log(pr.vector[i]);
  return from_potential(kernel.cluster(), g);
}

std::vector<SublinearityRow> sublinearity_scan(const CorrectorPotential& psi, std::size_t walks,
                                               std::uint64_t seed) {
  const GiantCluster& c = psi.graph();
  const LatticeTorus& lat = c.lattice();
  const auto d = static_cast<std::size_t>(lat.dim());
  const GradientField& G = psi.field();
  const auto origin = c.origin();
  if (!origin) throw ParameterError("origin is not in the giant cluster");

  std::vector<SublinearityRow> rows;
  for (const std::int64_t n : {lat.side() / 4, lat.side() / 2}) {
    if (n < 1) continue;
    SublinearityRow row;
    row.L = lat.side();
    row.n = n;
    const double nn = static_cast<double>(n);
    double max_abs = 0.0;
    std::size_t above05 = 0, above10 = 0;
    Point x(d, -n);
    for (bool more = true; more;) {
      if (const auto v = psi.at(x)) {
        const double a = std::abs(*v);
        max_abs = std::max(max_abs, a);
        if (a > 0.05 * nn) ++above05;
        if (a > 0.1 * nn) ++above10;
      }
      more = false;
      for (std::size_t i = d; i-- > 0;) {
        if (x[i] < n) {
          ++x[i];
          more = true;
          break;
        }
        x[i] = -n;
      }
    }
    const double volume = std::pow(nn, static_cast<double>(d));
    row.max_psi_over_n = max_abs / nn;
    row.fraction_eps05 = static_cast<double>(above05) / volume;
    row.fraction_eps10 = static_cast<double>(above10) / volume;

    for (std::size_t w = 0; w < walks; ++w) {
      CounterRng rng(derive_seed(seed, w));
      std::size_t site = *origin;
      double sum = 0.0;
      for (std::int64_t k = 1; k <= n; ++k) {
        int dir;
        do dir = static_cast<int>(rng.below(static_cast<std::uint64_t>(c.directions())));
        while (!c.open(site, dir));
        sum += G(site, dir);
        site = static_cast<std::size_t>(c.neighbor(site, dir));
        row.fitted_c_eps = std::max(row.fitted_c_eps, -sum - 0.1 * static_cast<double>(k));
      }
    }
    rows.push_back(row);
  }
  return rows;
}

void write_scan_csv(const std::vector<SublinearityRow>& rows, std::ostream& out) {
  out << "L,n,max_psi_over_n,avg_fraction_eps05,avg_fraction_eps10,fitted_c_eps\n";
  const auto old = out.precision(17);
  for (const auto& r : rows)
    out << r.L << ',' << r.n << ',' << r.max_psi_over_n << ',' << r.fraction_eps05 << ',' << r.fraction_eps10 << ','
        << r.fitted_c_eps << '\n';
  out.precision(old);
}

}  // namespace percoldp
