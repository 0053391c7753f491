// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.
// Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracles.hpp"
#include "percoldp/clusters.hpp"
#include "percoldp/corrector_field.hpp"
#include "percoldp/lab.hpp"
#include "percoldp/rate_functional.hpp"

using namespace percoldp;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSeed = 7;

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ClusterPtr replicate(std::int64_t L, double p, std::size_t r) {
  ConditionedSample s = condition_on_origin(2, L, p, derive_seed(derive_seed(kSeed, static_cast<std::uint64_t>(L)), r));
  return make_cluster(std::move(s.env), std::move(s.labels));
}

json lab_record(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = lab::run(args, out, err);
  if (code != lab::kOk) throw std::runtime_error("lab command failed (" + std::to_string(code) + "): " + err.str());
  return json::parse(out.str());
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// 1. h_bar, minimize_lambda and the Perron root agree on random clusters.
Verdict duality() {
  double worst_pair = 0.0, worst_perron = 0.0;
  for (const std::int64_t L : {8, 12, 16})
    for (std::size_t r = 0; r < 5; ++r) {
      const ClusterPtr c = replicate(L, 0.75, r);
      const TransitionKernel k = srw_kernel(c);
      for (const std::vector<double>& theta : std::vector<std::vector<double>>{{0.5, 0.0}, {0.3, 0.3}}) {
        const auto f = TestFunction::linear(theta).tabulate(*c);
        const double h = h_bar(k, f).value;
        const double m = minimize_lambda(k, f).value;
        const double rho = log_perron(build_tilted(k, f)).log_rho;
        worst_pair = std::max(worst_pair, std::abs(h - m));
        worst_perron = std::max({worst_perron, std::abs(h - rho), std::abs(m - rho)});
      }
    }
  return {worst_pair <= 1e-6 && worst_perron <= 1e-8,
          fmt("30 cases, max |h_bar - min_lambda| = %.2e (<= 1e-6), max gap to log_perron = %.2e (<= 1e-8)", worst_pair,
              worst_perron)};
}

// 2. All three routes reproduce the closed form on the all-open lattice.
Verdict closed_form() {
  const TransitionKernel k = srw_kernel(make_cluster(all_open(2, 8)));
  double worst = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const double a = -1.0 + 0.5 * i, b = -1.0 + 0.5 * j;
      const auto f = TestFunction::linear({a, b}).tabulate(k.graph());
      const double expect = oracle::allopen_log_mgf({a, b});
      worst = std::max({worst, std::abs(h_bar(k, f).value - expect), std::abs(minimize_lambda(k, f).value - expect),
                        std::abs(log_perron(build_tilted(k, f)).log_rho - expect)});
    }
  return {worst <= 1e-10, fmt("5x5 grid, max error %.2e (<= 1e-10)", worst)};
}

// 3. Entropy vanishes at the reference pair, is nonnegative and convex.
Verdict entropy() {
  const ClusterPtr c = replicate(8, 0.75, 0);
  double at_reference = 0.0;
  for (const TransitionKernel& k : {srw_kernel(c), beta_kernel(c, 2.0)})
    at_reference = std::max(at_reference, std::abs(entropy_I(stationary_pair(k), k).value));
  const TransitionKernel ref = srw_kernel(c);
  CounterRng rng(derive_seed(kSeed, 3));
  double min_value = INFINITY;
  std::size_t infinite = 0;
  for (int t = 0; t < 1000; ++t) {
    const RateValue v = entropy_I(random_balanced(c, rng), ref);
    infinite += v.infinite;
    min_value = std::min(min_value, v.value);
  }
  const ConvexityReport conv = convexity_probe(ref, 1000, rng);
  const bool pass = at_reference <= 1e-14 && infinite == 0 && min_value >= 0.0 && conv.violations == 0;
  return {pass, fmt("|I(reference pair)| = %.1e (<= 1e-14 rounding), min I over 1000 measures = %.3e, "
                    "%zu/%zu convexity violations (max excess %.1e)",
                    at_reference, min_value, conv.violations, conv.trials, conv.max_violation)};
}

// 4. Kernel/density pairs and balanced measures round-trip.
Verdict bijection() {
  const ClusterPtr c = replicate(12, 0.75, 0);
  CounterRng rng(derive_seed(kSeed, 4));
  double worst = 0.0, imbalance = 0.0;
  for (int t = 0; t < 200; ++t) {
    const TransitionKernel k = random_kernel(c, rng);
    const PairMeasure mu = pair_from(make_invariant_pair(k));
    imbalance = std::max(imbalance, in_m1_star(mu, 1.0).imbalance);
    const KernelDensityPair back = kdp_from(mu);
    for (std::size_t s = 0; s < k.values().size(); ++s)
      worst = std::max(worst, std::abs(back.kernel.values()[s] - k.values()[s]));
  }
  for (int t = 0; t < 200; ++t) {
    const PairMeasure mu = random_balanced(c, rng);
    const PairMeasure back = pair_from(kdp_from(mu));
    imbalance = std::max(imbalance, in_m1_star(back, 1.0).imbalance);
    for (std::size_t s = 0; s < mu.weights().size(); ++s)
      worst = std::max(worst, std::abs(back.weights()[s] - mu.weights()[s]));
  }
  return {worst <= 1e-12 && imbalance <= 1e-12,
          fmt("200 + 200 round trips, max error %.2e, max |(mu)_1 - (mu)_2|_1 %.2e (both <= 1e-12)", worst, imbalance)};
}

// 5. Time averages of f_theta match the stationary expectation.
Verdict ergodic() {
  const auto f = TestFunction::linear({1.0, 0.0});
  std::size_t hits[2] = {0, 0};
  for (std::size_t r = 0; r < 40; ++r) {
    const ClusterPtr c = replicate(16, 0.75, r);
    const TransitionKernel kernels[2] = {srw_kernel(c), beta_kernel(c, 2.0)};
    for (int i = 0; i < 2; ++i) {
      const ErgodicAverage e = ergodic_average(kernels[i], f, 1000000, derive_seed(derive_seed(kSeed, 5), r));
      hits[i] += e.gap <= 3.0 * e.batch_sigma;
    }
  }
  return {hits[0] >= 38 && hits[1] >= 38,
          fmt("within 3 batch sigma: srw %zu/40, beta=2 %zu/40 (need >= 38 each)", hits[0], hits[1])};
}

// 6. Finite-n log-MGFs approach the Perron root at rate 1/n; Monte Carlo agrees.
Verdict mgf() {
  const ClusterPtr c = replicate(16, 0.75, 0);
  const TransitionKernel k = srw_kernel(c);
  const auto f = TestFunction::linear({0.5, 0.0});
  const TiltedOperator op = build_tilted(k, f);
  const double rho = log_perron(op).log_rho;
  const std::vector<std::size_t> horizons{128, 256, 512, 1024, 2048, 4096};
  const auto lam = finite_n_mgf_at(op, c->anchor(), horizons);
  std::vector<double> scaled(lam.size());
  for (std::size_t i = 0; i < lam.size(); ++i) scaled[i] = static_cast<double>(horizons[i]) * std::abs(lam[i] - rho);
  // Non-increasing up to rounding in lambda_n, which n amplifies.
  bool trend = true, bounded = true;
  for (std::size_t i = 1; i < scaled.size(); ++i)
    trend = trend && scaled[i] <= scaled[i - 1] * (1.0 + 1e-9) + static_cast<double>(horizons[i]) * 1e-15;
  for (const double s : scaled) bounded = bounded && s <= 10.0 * scaled.back();
  const McMgfResult mc = mc_mgf(k, f, 256, 100000, derive_seed(kSeed, 6));
  const double exact = finite_n_mgf(op, c->anchor(), 256);
  const double z = (mc.estimate - exact) / mc.std_error;
  return {trend && bounded && std::abs(z) <= 3.0,
          fmt("n*gap from %.4f (n=128) to %.4f (n=4096), non-increasing %s, bounded %s; "
              "Monte Carlo %.5f vs %.5f, z = %.2f (|z| <= 3)",
              scaled.front(), scaled.back(), trend ? "yes" : "no", bounded ? "yes" : "no", mc.estimate, exact, z)};
}

// 7. Level-1 rate: minimum at zero, Legendre and constrained routes agree,
// closed form on the all-open lattice.
Verdict level_one() {
  const ClusterPtr c = replicate(8, 0.75, 0);
  const TransitionKernel ref = srw_kernel(c);
  const std::vector<std::vector<double>> checks{{0.05, 0.0}, {0.1, 0.0}, {0.0, 0.1}, {0.07, 0.07}, {-0.08, 0.03}};
  auto x_grid = box_grid(2, 0.3, 13);
  const std::size_t n_box = x_grid.size();
  x_grid.insert(x_grid.end(), checks.begin(), checks.end());
  const LevelOneCurve curve = level1_rate(ref, box_grid(2, 0.6, 61), x_grid);
  std::size_t best = 0;
  for (std::size_t i = 1; i < n_box; ++i)
    if (curve.J[i] < curve.J[best]) best = i;
  const double cell = 0.05;
  const bool argmin_ok =
      std::abs(curve.x[best][0]) <= cell + 1e-12 && std::abs(curve.x[best][1]) <= cell + 1e-12;
  const double j0 = curve.J[n_box / 2];
  double two_route = 0.0;
  for (std::size_t i = 0; i < checks.size(); ++i)
    two_route = std::max(two_route, std::abs(constrained_rate(ref, checks[i]).value - curve.J[n_box + i]));

  // All-open closed form: J is the Legendre transform of log mean cosh.
  const TransitionKernel open = srw_kernel(make_cluster(all_open(2, 4)));
  const double spacing = 0.1;
  const LevelOneCurve oc = level1_rate(open, box_grid(2, 2.0, 41), box_grid(2, 0.3, 7));
  double closed = 0.0;
  for (std::size_t i = 0; i < oc.x.size(); ++i) closed = std::max(closed, std::abs(oc.J[i] - oracle::allopen_rate(oc.x[i])));
  return {j0 <= 1e-6 && argmin_ok && two_route <= 1e-4 && closed <= 2.0 * spacing,
          fmt("J(0) = %.1e (<= 1e-6), argmin (%.2f, %.2f) within one cell, two-route gap %.1e (<= 1e-4), "
              "all-open max error %.1e (<= %.2f)",
              j0, curve.x[best][0], curve.x[best][1], two_route, closed, 2.0 * spacing)};
}

// 8. The corrector grows sublinearly.
Verdict sublinearity() {
  const json rec = lab_record({"corrector", "--p", "0.75", "--L", "64,128,256", "--seeds", "20", "--seed",
                               std::to_string(kSeed)});
  std::vector<double> med, frac;
  for (const auto& row : rec["outputs"]["per_L"]) {
    med.push_back(row["median_max_psi_over_half_L"].get<double>());
    frac.push_back(row["mean_fraction_eps10"].get<double>());
  }
  const bool strict = med[0] > med[1] && med[1] > med[2];
  const bool decreasing = frac[0] >= frac[1] && frac[1] >= frac[2];
  return {strict && decreasing,
          fmt("median max|Psi|/(L/2): %.4f, %.4f, %.4f (strictly decreasing); "
              "mean fraction eps=0.1: %.4f, %.4f, %.4f (decreasing)",
              med[0], med[1], med[2], frac[0], frac[1], frac[2])};
}

// 9. Chemical distance ratios are stable in L.
Verdict chemdist() {
  const json rec = lab_record({"chemdist", "--p", "0.75", "--L", "64,256", "--pairs", "10000", "--seed",
                               std::to_string(kSeed)});
  const double a = rec["outputs"]["per_L"][0]["p99"].get<double>();
  const double b = rec["outputs"]["per_L"][1]["p99"].get<double>();
  const double rel = std::abs(a - b) / b;
  return {rel <= 0.25, fmt("p99 ratio %.4f (L=64) vs %.4f (L=256), relative change %.3f (<= 0.25)", a, b, rel)};
}

// 10. Potential fields pass validation; every single-edge perturbation fails.
Verdict validation() {
  std::size_t passed = 0;
  for (std::size_t e = 0; e < 10; ++e) {
    const ClusterPtr c = replicate(16, 0.75, e);
    CounterRng rng(derive_seed(derive_seed(kSeed, 10), e));
    for (int t = 0; t < 50; ++t) {
      std::vector<double> g(c->size());
      for (auto& v : g) v = 4.0 * rng.uniform() - 2.0;
      passed += validate(from_potential(c, g)).pass;
    }
  }
  const ClusterPtr c = replicate(8, 0.75, 0);
  std::vector<double> g(c->size());
  CounterRng rng(derive_seed(kSeed, 11));
  for (auto& v : g) v = rng.uniform();
  const GradientField base = from_potential(c, g);
  std::size_t perturbations = 0, caught = 0;
  for (std::size_t s = 0; s < c->slots(); ++s) {
    if (!c->open(s / static_cast<std::size_t>(c->directions()), static_cast<int>(s % c->directions()))) continue;
    for (const double delta : {1e-6, -1e-6, 1e-2}) {
      std::vector<double> v(base.values().begin(), base.values().end());
      v[s] += delta;
      ++perturbations;
      caught += !validate(load_field(c, std::move(v))).pass;
    }
  }
  return {passed == 500 && caught == perturbations,
          fmt("%zu/500 potential fields pass, %zu/%zu single-edge perturbations caught", passed, caught, perturbations)};
}

// 11. A strongly biased walk is slower than a mildly biased one.
Verdict speed() {
  const json rec = lab_record({"speed", "--p", "0.7", "--L", "64", "--beta", "1.5,10", "--n", "100000", "--seeds",
                               "50", "--seed", std::to_string(kSeed)});
  const double frac = rec["outputs"]["fraction_last_below_first"].get<double>();
  const double m15 = rec["outputs"]["per_beta"][0]["mean_speed"].get<double>();
  const double m10 = rec["outputs"]["per_beta"][1]["mean_speed"].get<double>();
  return {frac >= 0.8, fmt("speed(beta=10) < speed(beta=1.5) in %.0f%% of 50 seeds (need >= 80%%); "
                           "mean speeds %.4f (beta=1.5), %.4f (beta=10)",
                           100.0 * frac, m15, m10)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"duality identity", duality},        {"closed-form oracle", closed_form},
      {"entropy properties", entropy},      {"pair bijection", bijection},
      {"ergodic averages", ergodic},        {"MGF convergence", mgf},
      {"level-1 consistency", level_one},   {"corrector sublinearity", sublinearity},
      {"chemical distance", chemdist},      {"gradient field validation", validation},
      {"biased-walk speed", speed},
  };
  std::set<std::size_t> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoul(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && !only.count(i + 1)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << v.detail
              << fmt(" (%.1f s)", secs) << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
