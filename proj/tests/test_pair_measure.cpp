#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "percoldp/clusters.hpp"
#include "percoldp/error.hpp"
#include "percoldp/pair_measure.hpp"

using namespace percoldp;

namespace {

ClusterPtr random_cluster(std::int64_t L, double p, std::uint64_t seed) {
  ConditionedSample s = condition_on_origin(2, L, p, seed);
  return make_cluster(std::move(s.env), std::move(s.labels));
}

ClusterPtr single_bond_cluster() {
  std::vector<std::uint64_t> words(1, 1);
  return make_cluster(Environment(LatticeTorus(2, 4), 0.0, 0, words));
}

double max_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(PairMeasure, RejectsInvalidTables) {
  const ClusterPtr c = single_bond_cluster();
  std::vector<double> w(c->slots(), 0.0);
  w[0] = 0.5;
  w[4 + 2] = 0.5;
  EXPECT_NO_THROW(PairMeasure(c, w));
  w[0] = 0.6;
  EXPECT_THROW(PairMeasure(c, w), AdmissibilityError);
  w[0] = 0.5;
  w[1] = 0.1;
  w[4 + 2] = 0.4;
  EXPECT_THROW(PairMeasure(c, w), AdmissibilityError);
  w[1] = 0.0;
  w[0] = -0.5;
  w[4 + 2] = 1.5;
  EXPECT_THROW(PairMeasure(c, w), AdmissibilityError);
}

TEST(Empirical, AlternatingWalk) {
  const ClusterPtr c = single_bond_cluster();
  const PairMeasure even = pair_empirical(simulate(srw_kernel(c), 0, 10, 1));
  EXPECT_DOUBLE_EQ(even(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(even(1, 2), 0.5);
  EXPECT_TRUE(in_m1_star(even).member);
  const PairMeasure odd = pair_empirical(simulate(srw_kernel(c), 0, 3, 1));
  EXPECT_DOUBLE_EQ(odd(0, 0), 2.0 / 3.0);
  const MembershipReport r = in_m1_star(odd);
  EXPECT_FALSE(r.member);
  EXPECT_NEAR(r.imbalance, 2.0 / 3.0, 1e-15);
  EXPECT_THROW(pair_empirical(simulate(srw_kernel(c), 0, 0, 1)), ParameterError);
}

TEST(Empirical, PathImbalanceIsAtMostTwoOverN) {
  const ClusterPtr c = random_cluster(10, 0.7, 2);
  for (std::size_t n : {1, 17, 1000}) {
    const PairMeasure mu = pair_empirical(simulate(srw_kernel(c), c->anchor(), n, 4));
    EXPECT_LE(in_m1_star(mu, 1.0).imbalance, 2.0 / static_cast<double>(n) + 1e-14);
  }
}

TEST(Membership, DetectsMissingSupport) {
  const ClusterPtr c = make_cluster(all_open(2, 3));
  std::vector<double> w(c->slots(), 0.0);
  // Unit circulation around the first row: balanced, but each visited site
  // uses only one of its four open edges.
  for (std::size_t i = 0; i < 3; ++i) w[*c->local(i) * 4 + 1] = 1.0 / 3.0;
  const MembershipReport r = in_m1_star(PairMeasure(c, w));
  EXPECT_FALSE(r.member);
  EXPECT_NE(r.violation.find("support"), std::string::npos);
  EXPECT_NEAR(r.imbalance, 0.0, 1e-15);
}

TEST(Stationary, PairIsBalancedWithFullSupport) {
  const ClusterPtr c = random_cluster(16, 0.65, 7);
  CounterRng rng(2);
  const PairMeasure mu = stationary_pair(random_kernel(c, rng));
  const MembershipReport r = in_m1_star(mu);
  EXPECT_TRUE(r.member) << r.violation;
  EXPECT_LE(r.imbalance, 1e-12);
}

TEST(Bijection, KernelRoundTrip) {
  const ClusterPtr c = random_cluster(12, 0.7, 3);
  CounterRng rng(5);
  for (int t = 0; t < 20; ++t) {
    const TransitionKernel k = random_kernel(c, rng);
    const KernelDensityPair back = kdp_from(pair_from(make_invariant_pair(k)));
    EXPECT_LE(max_diff(back.kernel.values(), k.values()), 1e-12);
  }
}

TEST(Bijection, MeasureRoundTrip) {
  const ClusterPtr c = random_cluster(12, 0.7, 3);
  CounterRng rng(6);
  for (int t = 0; t < 20; ++t) {
    const PairMeasure mu = random_balanced(c, rng);
    ASSERT_TRUE(in_m1_star(mu).member);
    const PairMeasure back = pair_from(kdp_from(mu));
    EXPECT_LE(max_diff(back.weights(), mu.weights()), 1e-12);
  }
}

TEST(Bijection, DensityHasMeanOneAndMatchesOracle) {
  const ClusterPtr c = random_cluster(8, 0.7, 1);
  CounterRng rng(9);
  const TransitionKernel k = random_kernel(c, rng);
  const KernelDensityPair kdp = make_invariant_pair(k);
  double mean = 0.0;
  for (const double v : kdp.density) mean += v;
  EXPECT_NEAR(mean / static_cast<double>(c->size()), 1.0, 1e-12);
  const Eigen::VectorXd ref = oracle::dense_stationary(oracle::dense_operator(
      *c, [&](std::size_t i, int e) { return k(i, e); }, [](std::size_t, int) { return 0.0; }));
  for (std::size_t i = 0; i < c->size(); ++i)
    EXPECT_NEAR(kdp.density[i], static_cast<double>(c->size()) * ref[static_cast<Eigen::Index>(i)], 1e-10);
}

TEST(Bijection, RejectsNonInvariantDensity) {
  const ClusterPtr c = random_cluster(8, 0.7, 1);
  CounterRng rng(3);
  KernelDensityPair kdp = make_invariant_pair(random_kernel(c, rng));
  kdp.invariant = false;
  EXPECT_THROW(pair_from(kdp), AdmissibilityError);
  kdp.invariant = true;
  std::fill(kdp.density.begin(), kdp.density.end(), 1.0);
  kdp.density[0] = 1.5;
  kdp.density[1] = 0.5;
  EXPECT_THROW(pair_from(kdp), AdmissibilityError);
  const ClusterPtr s = single_bond_cluster();
  EXPECT_THROW(kdp_from(pair_empirical(simulate(srw_kernel(s), 0, 3, 1))), AdmissibilityError);
}

TEST(Distance, TotalVariationAndMixtures) {
  const ClusterPtr c = random_cluster(10, 0.7, 4);
  CounterRng rng(1);
  const PairMeasure a = random_balanced(c, rng);
  const PairMeasure b = random_balanced(c, rng);
  EXPECT_EQ(total_variation(a, a), 0.0);
  const double d = total_variation(a, b);
  EXPECT_GT(d, 0.0);
  EXPECT_LE(d, 1.0);
  EXPECT_NEAR(total_variation(a, b), total_variation(b, a), 1e-16);
  const PairMeasure m = PairMeasure::mix(a, b, 0.3);
  EXPECT_NEAR(total_variation(m, b), 0.3 * d, 1e-14);
  EXPECT_TRUE(in_m1_star(m).member);
  const PairMeasure other = random_balanced(random_cluster(10, 0.7, 5), rng);
  EXPECT_THROW(total_variation(a, other), ParameterError);
}

TEST(Expectation, LinearFunctionGivesMeanStep) {
  const ClusterPtr c = random_cluster(10, 0.7, 2);
  const TransitionKernel k = beta_kernel(c, 3.0);
  const PairMeasure mu = stationary_pair(k);
  const auto table = TestFunction::linear({1.0, 0.0}).tabulate(*c);
  const auto phi = stationary(k);
  double expect = 0.0;
  for (std::size_t i = 0; i < c->size(); ++i) expect += phi[i] * (k(i, 0) - k(i, 2));
  EXPECT_NEAR(expectation(mu, table), expect, 1e-14);
  EXPECT_GT(expect, 0.0);
}

TEST(Ergodic, TimeAverageMatchesStationaryExpectation) {
  const ClusterPtr c = random_cluster(16, 0.7, 3);
  const TransitionKernel k = beta_kernel(c, 2.0);
  const ErgodicAverage r = ergodic_average(k, TestFunction::degree_weighted(1.0), 200000, 17);
  EXPECT_LE(r.gap, 4.0 * r.batch_sigma);
  EXPECT_GT(r.batch_sigma, 0.0);
  const auto phi = stationary(k);
  double expect = 0.0;
  for (std::size_t i = 0; i < c->size(); ++i) expect += phi[i] * c->degree(i) / 4.0;
  EXPECT_NEAR(r.stationary_expectation, expect, 1e-13);
  EXPECT_THROW(ergodic_average(k, TestFunction::zero(), 0, 1), ParameterError);
  EXPECT_THROW(ergodic_average(k, TestFunction::zero(), 10, 1, 20), ParameterError);
}

TEST(PairCsv, ListsNonzeroWeights) {
  const ClusterPtr c = single_bond_cluster();
  std::ostringstream out;
  write_pair_csv(pair_empirical(simulate(srw_kernel(c), 0, 2, 1)), out);
  EXPECT_EQ(out.str(), "site_index,direction_index,weight\n0,0,0.5\n4,2,0.5\n");
}
