#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "percoldp/clusters.hpp"
#include "percoldp/error.hpp"
#include "percoldp/rate_functional.hpp"

using namespace percoldp;

namespace {

ClusterPtr random_cluster(std::int64_t L, double p, std::uint64_t seed) {
  ConditionedSample s = condition_on_origin(2, L, p, seed);
  return make_cluster(std::move(s.env), std::move(s.labels));
}

// L=4 torus whose giant cluster is the ring of sites 0..3 along the second axis.
ClusterPtr ring_cluster() {
  std::vector<std::uint64_t> words(1, 0xAAULL);
  return make_cluster(Environment(LatticeTorus(2, 4), 0.0, 0, words));
}

double pair_value(const PairMeasure& mu, const TransitionKernel& ref, std::span<const double> f) {
  return expectation(mu, f) - entropy_I(mu, ref).value;
}

}  // namespace

TEST(Entropy, StationaryPairHasZeroEntropy) {
  const ClusterPtr c = random_cluster(16, 0.7, 2);
  for (const TransitionKernel& k : {srw_kernel(c), beta_kernel(c, 2.0)}) {
    const RateValue r = entropy_I(stationary_pair(k), k);
    EXPECT_FALSE(r.infinite);
    EXPECT_NEAR(r.value, 0.0, 1e-14);
  }
}

TEST(Entropy, PositiveAwayFromStationaryPair) {
  const ClusterPtr c = random_cluster(10, 0.75, 3);
  const TransitionKernel ref = srw_kernel(c);
  CounterRng rng(8);
  for (int t = 0; t < 50; ++t) {
    const RateValue r = entropy_I(random_balanced(c, rng), ref);
    ASSERT_FALSE(r.infinite);
    EXPECT_GT(r.value, 0.0);
  }
}

TEST(Entropy, MatchesDirectSumOnRandomKernel) {
  const ClusterPtr c = random_cluster(8, 0.75, 1);
  const TransitionKernel ref = beta_kernel(c, 2.5);
  CounterRng rng(4);
  const TransitionKernel other = random_kernel(c, rng);
  const PairMeasure mu = stationary_pair(other);
  const auto phi = stationary(other);
  double expect = 0.0;
  for (std::size_t i = 0; i < c->size(); ++i)
    for (int e = 0; e < 4; ++e)
      if (c->open(i, e)) expect += phi[i] * other(i, e) * std::log(other(i, e) / ref(i, e));
  EXPECT_NEAR(entropy_I(mu, ref).value, expect, 1e-13);
}

TEST(Entropy, UnbalancedMeasureIsInfinite) {
  const ClusterPtr c = random_cluster(8, 0.75, 1);
  const TransitionKernel ref = srw_kernel(c);
  const PairMeasure mu = pair_empirical(simulate(ref, c->anchor(), 5, 2));
  const RateValue r = entropy_I(mu, ref);
  EXPECT_TRUE(r.infinite);
  const ClusterPtr other = random_cluster(8, 0.75, 2);
  EXPECT_THROW(entropy_I(stationary_pair(srw_kernel(other)), ref), ParameterError);
}

TEST(Entropy, DegreeTwoRingApproachesLogTwo) {
  const ClusterPtr c = ring_cluster();
  ASSERT_EQ(c->size(), 4U);
  const TransitionKernel ref = srw_kernel(c);
  std::vector<double> w(c->slots(), 0.0);
  for (std::size_t i = 0; i < 4; ++i) w[i * 4 + 1] = 0.25;  // always step +e2
  const PairMeasure circulation(c, w);
  // Concentrating on one edge leaves the full-support class.
  EXPECT_TRUE(entropy_I(circulation, ref).infinite);
  const PairMeasure uniform = stationary_pair(ref);
  for (const double eps : {1e-3, 1e-6, 1e-9}) {
    const PairMeasure mu = PairMeasure::mix(circulation, uniform, 1.0 - eps);
    const double a = 1.0 - eps / 2.0;
    const double b = eps / 2.0;
    const double expect = a * std::log(2.0 * a) + b * std::log(2.0 * b);
    EXPECT_NEAR(entropy_I(mu, ref).value, expect, 1e-13);
    EXPECT_NEAR(entropy_I(mu, ref).value, std::log(2.0), 2.0 * eps * (1.0 - std::log(eps)));
  }
}

TEST(HBar, ZeroFunctionGivesStationaryWitness) {
  const ClusterPtr c = random_cluster(12, 0.7, 5);
  const TransitionKernel ref = beta_kernel(c, 2.0);
  const HBarResult r = h_bar(ref, TestFunction::zero());
  EXPECT_NEAR(r.value, 0.0, 1e-13);
  EXPECT_LE(total_variation(r.witness, stationary_pair(ref)), 1e-12);
}

TEST(HBar, AllOpenClosedForm) {
  const TransitionKernel ref = srw_kernel(make_cluster(all_open(2, 6)));
  for (const std::vector<double>& theta : std::vector<std::vector<double>>{{0.5, 0.0}, {-1.0, 0.7}, {1.0, 1.0}})
    EXPECT_NEAR(h_bar(ref, TestFunction::linear(theta)).value, oracle::allopen_log_mgf(theta), 1e-12);
}

TEST(HBar, MatchesPerronAndDenseOracle) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const ClusterPtr c = random_cluster(8, 0.75, seed);
    const TransitionKernel ref = srw_kernel(c);
    const std::vector<double> theta{0.5, 0.0};
    const auto f = TestFunction::linear(theta);
    const HBarResult r = h_bar(ref, f);
    EXPECT_NEAR(r.value, log_perron(build_tilted(ref, f)).log_rho, 1e-10);
    const Eigen::MatrixXd M = oracle::dense_operator(
        *c, [&](std::size_t i, int e) { return ref(i, e); },
        [&](std::size_t, int e) { return (e < 2 ? 1.0 : -1.0) * theta[static_cast<std::size_t>(e % 2)]; });
    EXPECT_NEAR(r.value, oracle::power_log_rho(M), 1e-10);
  }
}

TEST(HBar, WitnessAttainsValue) {
  const ClusterPtr c = random_cluster(12, 0.7, 7);
  const TransitionKernel ref = srw_kernel(c);
  const auto table = TestFunction::linear({0.3, 0.3}).tabulate(*c);
  const HBarResult r = h_bar(ref, table);
  EXPECT_TRUE(in_m1_star(r.witness).member);
  EXPECT_NEAR(pair_value(r.witness, ref, table), r.value, 1e-12);
  EXPECT_LE(r.residual, 1e-12);
}

TEST(HBar, PerronTiltIsOptimal) {
  const ClusterPtr c = random_cluster(12, 0.7, 2);
  const TransitionKernel ref = beta_kernel(c, 2.0);
  const auto f = TestFunction::linear({0.4, -0.1});
  const PerronResult p = log_perron(build_tilted(ref, f));
  std::vector<double> g(p.vector.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = -std::log(p.vector[i]);
  const PairMeasure mu = stationary_pair(tilt_from_potential(ref, f, g));
  EXPECT_NEAR(pair_value(mu, ref, f.tabulate(*c)), p.log_rho, 1e-10);
}

TEST(HBar, DualitySandwichOnRandomMeasures) {
  const ClusterPtr c = random_cluster(10, 0.75, 4);
  const TransitionKernel ref = srw_kernel(c);
  const auto table = TestFunction::linear({0.5, 0.0}).tabulate(*c);
  const double best = h_bar(ref, table).value;
  CounterRng rng(12);
  for (int t = 0; t < 30; ++t) EXPECT_LE(pair_value(random_balanced(c, rng), ref, table), best + 1e-12);
}

TEST(HBar, MidpointConvexInTheta) {
  const TransitionKernel ref = srw_kernel(random_cluster(10, 0.75, 6));
  const auto grid = box_grid(1, 1.0, 9);
  std::vector<double> v;
  for (const auto& t : grid) v.push_back(h_bar(ref, TestFunction::linear({t[0], 0.2})).value);
  for (std::size_t i = 1; i + 1 < v.size(); ++i) EXPECT_LE(v[i], 0.5 * (v[i - 1] + v[i + 1]) + 1e-9);
}

TEST(Xi, ContractionExamples) {
  const ClusterPtr c = random_cluster(10, 0.7, 3);
  std::vector<double> w(c->slots(), 0.0);
  w[c->anchor() * 4] = 1.0;
  ASSERT_TRUE(c->open(c->anchor(), 0) || true);
  if (c->open(c->anchor(), 0)) EXPECT_EQ(xi_contraction(PairMeasure(c, w)), (std::vector<double>{1.0, 0.0}));
  std::vector<double> u(c->slots(), 0.0);
  for (std::size_t s = 0; s < u.size(); ++s)
    if (c->open(s / 4, static_cast<int>(s % 4))) u[s] = 1.0 / static_cast<double>(c->open_edge_count());
  const auto zero = xi_contraction(PairMeasure(c, u));
  EXPECT_NEAR(zero[0], 0.0, 1e-15);
  EXPECT_NEAR(zero[1], 0.0, 1e-15);
  const Trajectory t = simulate(beta_kernel(c, 3.0), c->anchor(), 777, 5);
  const auto xi = xi_contraction(pair_empirical(t));
  const auto v = mean_velocity(t);
  EXPECT_NEAR(xi[0], v[0], 1e-14);
  EXPECT_NEAR(xi[1], v[1], 1e-14);
}

TEST(Grid, BoxGridLayout) {
  const auto g = box_grid(2, 1.5, 3);
  ASSERT_EQ(g.size(), 9U);
  EXPECT_EQ(g.front(), (std::vector<double>{-1.5, -1.5}));
  EXPECT_EQ(g[4], (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(g.back(), (std::vector<double>{1.5, 1.5}));
  EXPECT_EQ(box_grid(2, 1.0, 1), (std::vector<std::vector<double>>{{0.0, 0.0}}));
  EXPECT_THROW(box_grid(2, -1.0, 3), ParameterError);
}

TEST(LevelOne, DegenerateTiltGridGivesZeroCurve) {
  const TransitionKernel ref = srw_kernel(random_cluster(8, 0.75, 1));
  const LevelOneCurve curve = level1_rate(ref, {{0.0, 0.0}}, box_grid(2, 0.2, 3));
  for (const double j : curve.J) EXPECT_NEAR(j, 0.0, 1e-12);
}

TEST(LevelOne, SrwMinimumAtZero) {
  const TransitionKernel ref = srw_kernel(random_cluster(12, 0.75, 2));
  const LevelOneCurve curve = level1_rate(ref, box_grid(2, 1.0, 11), box_grid(2, 0.2, 5));
  EXPECT_LE(curve.J[12], 1e-6);
  for (const double j : curve.J) EXPECT_GE(j, curve.J[12] - 1e-12);
  // Midpoint convexity along each grid row.
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t i = 1; i + 1 < 5; ++i)
      EXPECT_LE(curve.J[r * 5 + i], 0.5 * (curve.J[r * 5 + i - 1] + curve.J[r * 5 + i + 1]) + 1e-9);
}

TEST(LevelOne, AllOpenMatchesClosedFormTransform) {
  const TransitionKernel ref = srw_kernel(make_cluster(all_open(2, 4)));
  const double spacing = 0.1;
  const LevelOneCurve curve = level1_rate(ref, box_grid(2, 2.0, 41), box_grid(2, 0.3, 7));
  for (std::size_t i = 0; i < curve.x.size(); ++i) {
    EXPECT_FALSE(curve.saturated[i]);
    EXPECT_NEAR(curve.J[i], oracle::allopen_rate(curve.x[i]), 2.0 * spacing);
    EXPECT_LE(curve.J[i], oracle::allopen_rate(curve.x[i]) + 1e-12);
  }
}

TEST(LevelOne, FlagsSaturationAtUnreachableVelocity) {
  const TransitionKernel ref = srw_kernel(make_cluster(all_open(2, 4)));
  const LevelOneCurve curve = level1_rate(ref, box_grid(2, 1.0, 5), {{0.95, 0.0}});
  EXPECT_TRUE(curve.saturated[0]);
  std::ostringstream a, b;
  write_level1_csv(curve, a);
  write_hbar_csv(curve, b);
  EXPECT_EQ(a.str().rfind("x1,x2,J\n", 0), 0U);
  EXPECT_EQ(b.str().rfind("theta1,theta2,hbar\n", 0), 0U);
}

TEST(Constrained, AllOpenMatchesLegendreOracle) {
  const TransitionKernel ref = srw_kernel(make_cluster(all_open(2, 4)));
  for (const std::vector<double>& x : std::vector<std::vector<double>>{{0.1, 0.0}, {0.2, -0.1}, {0.0, 0.0}}) {
    const ConstrainedRate r = constrained_rate(ref, x);
    EXPECT_NEAR(r.value, oracle::allopen_rate(x), 1e-9);
    EXPECT_NEAR(r.xi[0], x[0], 1e-9);
    EXPECT_NEAR(r.xi[1], x[1], 1e-9);
  }
}

TEST(Constrained, AgreesWithLegendreRoute) {
  const TransitionKernel ref = srw_kernel(random_cluster(8, 0.75, 3));
  const std::vector<double> x{0.1, 0.0};
  const ConstrainedRate r = constrained_rate(ref, x);
  const LevelOneCurve curve = level1_rate(ref, box_grid(2, 0.4, 41), {x});
  EXPECT_NEAR(r.value, curve.J[0], 1e-4);
  EXPECT_LE(curve.J[0], r.value + 1e-9);
  EXPECT_NEAR(entropy_I(r.witness, ref).value, r.value, 1e-14);
  EXPECT_THROW(constrained_rate(ref, std::vector<double>{0.1}), ParameterError);
}

TEST(Convexity, ProbeFindsNoViolations) {
  const TransitionKernel ref = srw_kernel(random_cluster(8, 0.75, 1));
  CounterRng rng(3);
  const ConvexityReport r = convexity_probe(ref, 100, rng);
  EXPECT_EQ(r.trials, 100U);
  EXPECT_EQ(r.violations, 0U);
  EXPECT_LE(r.max_violation, 1e-12);
}

TEST(Convexity, EndpointsAndEqualMeasuresAreExact) {
  const ClusterPtr c = random_cluster(8, 0.75, 1);
  const TransitionKernel ref = srw_kernel(c);
  CounterRng rng(2);
  const PairMeasure a = random_balanced(c, rng);
  const PairMeasure b = random_balanced(c, rng);
  const double ia = entropy_I(a, ref).value;
  EXPECT_NEAR(entropy_I(PairMeasure::mix(a, a, 0.4), ref).value, ia, 1e-14);
  EXPECT_NEAR(entropy_I(PairMeasure::mix(a, b, 1.0), ref).value, ia, 1e-14);
  EXPECT_NEAR(entropy_I(PairMeasure::mix(a, b, 0.0), ref).value, entropy_I(b, ref).value, 1e-14);
}
