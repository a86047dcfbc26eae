#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "test_support.hpp"
#include "veritas/error.hpp"
#include "veritas/gmm.hpp"

namespace veritas {
namespace {

DescriptorBag two_clusters(std::uint64_t seed, std::size_t per_cluster = 500) {
  Rng rng(seed);
  std::vector<double> v;
  for (std::size_t i = 0; i < per_cluster; ++i) v.push_back(-10.0 + rng.normal());
  for (std::size_t i = 0; i < per_cluster; ++i) v.push_back(10.0 + rng.normal());
  return DescriptorBag(1, std::move(v));
}

TEST(Gmm, SingleComponentMatchesSampleMoments) {
  Rng rng(11);
  auto bag = testing::random_bag(rng, 1000, 1);
  const auto& x = bag.matrix().data();
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= x.size();
  const auto g = fit_gmm(bag, 1);
  EXPECT_NEAR(g.mean(0)[0], mean, 0.1);
  EXPECT_NEAR(g.variance(0)[0], var, 0.1);
  EXPECT_DOUBLE_EQ(g.weight(0), 1.0);
}

TEST(Gmm, RecoversTwoSeparatedClusters) {
  for (std::uint64_t seed : {1, 2, 3}) {
    EmConfig cfg;
    cfg.seed = seed;
    const auto g = fit_gmm(two_clusters(seed), 2, cfg);
    const std::size_t lo = g.mean(0)[0] < g.mean(1)[0] ? 0 : 1;
    EXPECT_NEAR(g.weight(lo), 0.5, 0.05);
    EXPECT_NEAR(g.weight(1 - lo), 0.5, 0.05);
    EXPECT_NEAR(g.mean(lo)[0], -10.0, 0.5);
    EXPECT_NEAR(g.mean(1 - lo)[0], 10.0, 0.5);
  }
}

TEST(Gmm, EmLogLikelihoodNeverDecreases) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const std::size_t k = std::array<std::size_t, 4>{1, 2, 4, 8}[seed % 4];
    const std::size_t d = 1 + rng.index(4);
    auto bag = testing::random_bag(rng, 200 + rng.index(200), d);
    EmConfig cfg;
    cfg.seed = seed;
    cfg.tolerance = 1e-12;
    cfg.max_iterations = 60;
    const auto r = fit_gmm_traced(bag, k, cfg);
    ASSERT_GE(r.log_likelihood_trace.size(), 2u);
    for (std::size_t i = 1; i < r.log_likelihood_trace.size(); ++i) {
      EXPECT_GE(r.log_likelihood_trace[i], r.log_likelihood_trace[i - 1] - 1e-8) << "seed " << seed << " iter " << i;
    }
  }
}

TEST(Gmm, InvariantsAndVarianceFloorHold) {
  Rng rng(3);
  auto bag = testing::random_bag(rng, 300, 3);
  EmConfig cfg;
  cfg.variance_floor_factor = 0.5;  // large enough to bind
  const auto g = fit_gmm(bag, 6, cfg);
  double wsum = 0.0;
  for (std::size_t k = 0; k < g.components(); ++k) {
    EXPECT_GT(g.weight(k), 0.0);
    wsum += g.weight(k);
  }
  EXPECT_NEAR(wsum, 1.0, 1e-9);
  for (std::size_t j = 0; j < 3; ++j) {
    double m = 0.0, v = 0.0;
    for (std::size_t t = 0; t < bag.size(); ++t) m += bag.row(t)[j];
    m /= bag.size();
    for (std::size_t t = 0; t < bag.size(); ++t) v += (bag.row(t)[j] - m) * (bag.row(t)[j] - m);
    v /= bag.size();
    for (std::size_t k = 0; k < g.components(); ++k) EXPECT_GE(g.variance(k)[j], 0.5 * v * (1 - 1e-12));
  }
}

TEST(Gmm, DeterministicForFixedSeed) {
  Rng rng(8);
  auto bag = testing::random_bag(rng, 400, 2);
  EmConfig cfg;
  cfg.seed = 42;
  EXPECT_EQ(fit_gmm(bag, 4, cfg), fit_gmm(bag, 4, cfg));
  EXPECT_EQ(fit_gmm(bag, 4, cfg).id(), fit_gmm(bag, 4, cfg).id());
}

TEST(Gmm, DegenerateInputsRejected) {
  EXPECT_THROW(fit_gmm(DescriptorBag(1, {1.0, 2.0}), 3), DegenerateDataError);
  EXPECT_THROW(fit_gmm(DescriptorBag(2, std::vector<double>(20, 4.0)), 2), DegenerateDataError);
  EmConfig bad;
  bad.max_iterations = 0;
  EXPECT_THROW(fit_gmm(DescriptorBag(1, {1.0, 2.0, 3.0}), 1, bad), ConfigError);
}

GaussianMixture symmetric_pair(double m) { return GaussianMixture(1, {0.5, 0.5}, {-m, m}, {1.0, 1.0}); }

TEST(Posteriors, SingleComponentIsExactlyOne) {
  const GaussianMixture g(2, {1.0}, {0.3, -1.0}, {2.0, 0.5});
  EXPECT_EQ(posteriors(g, std::vector<double>{5.0, 5.0}), std::vector<double>{1.0});
}

TEST(Posteriors, SymmetricMixtureAtOriginIsHalfHalf) {
  const auto p = posteriors(symmetric_pair(3.0), std::vector<double>{0.0});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

// Log posterior by long-double log-sum-exp, written from the density formula.
long double oracle_log_posterior(const GaussianMixture& g, std::span<const double> x, std::size_t k) {
  std::vector<long double> lj(g.components());
  for (std::size_t c = 0; c < g.components(); ++c) {
    long double s = std::log(static_cast<long double>(g.weight(c)));
    for (std::size_t d = 0; d < g.dim(); ++d) {
      const long double v = g.variance(c)[d], diff = x[d] - g.mean(c)[d];
      s += -0.5L * std::log(2.0L * std::numbers::pi_v<long double> * v) - 0.5L * diff * diff / v;
    }
    lj[c] = s;
  }
  const long double mx = *std::max_element(lj.begin(), lj.end());
  long double acc = 0.0L;
  for (auto v : lj) acc += std::exp(v - mx);
  return lj[k] - mx - std::log(acc);
}

TEST(Posteriors, FarPointStaysFiniteAndMatchesExtendedPrecision) {
  const GaussianMixture g(1, {0.5, 0.5}, {0.0, 100.0}, {1.0, 1.0});
  const std::vector<double> x{0.0};
  const auto p = posteriors(g, x);
  ASSERT_TRUE(std::isfinite(p[0]) && std::isfinite(p[1]));
  EXPECT_GE(p[0], 1.0 - 1e-30);
  EXPECT_LE(p[1], 1e-30);
  const auto lp = log_posteriors(g, x);
  const long double expect = oracle_log_posterior(g, x, 1);
  EXPECT_NEAR(lp[1], static_cast<double>(expect), 1e-9 * std::fabs(static_cast<double>(expect)));
  EXPECT_NEAR(lp[1], -5000.0, 1e-6);
}

TEST(Posteriors, RandomMixturesMatchOracleAndSumToOne) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.index(5), d = 1 + rng.index(4);
    std::vector<double> w(k), mu(k * d), var(k * d);
    double ws = 0.0;
    for (auto& v : w) ws += (v = rng.uniform(0.05, 1.0));
    for (auto& v : w) v /= ws;
    for (auto& v : mu) v = 5.0 * rng.normal();
    for (auto& v : var) v = rng.uniform(0.1, 3.0);
    const GaussianMixture g(d, w, mu, var);
    std::vector<double> x(d);
    for (auto& v : x) v = 8.0 * rng.normal();
    const auto p = posteriors(g, x);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    for (std::size_t c = 0; c < k; ++c) {
      EXPECT_GE(p[c], 0.0);
      EXPECT_NEAR(p[c], std::exp(static_cast<double>(oracle_log_posterior(g, x, c))), 1e-12);
    }
  }
}

TEST(Posteriors, RelabelingComponentsPermutesPosteriors) {
  const GaussianMixture g(2, {0.2, 0.3, 0.5}, {0, 0, 1, 1, -2, 3}, {1, 2, 0.5, 1, 3, 1});
  const GaussianMixture h(2, {0.5, 0.2, 0.3}, {-2, 3, 0, 0, 1, 1}, {3, 1, 1, 2, 0.5, 1});
  const std::vector<double> x{0.4, 0.9};
  const auto p = posteriors(g, x), q = posteriors(h, x);
  EXPECT_NEAR(q[0], p[2], 1e-15);
  EXPECT_NEAR(q[1], p[0], 1e-15);
  EXPECT_NEAR(q[2], p[1], 1e-15);
}

TEST(Posteriors, DimensionMismatchThrows) {
  EXPECT_THROW(posteriors(symmetric_pair(1.0), std::vector<double>{1.0, 2.0}), DimensionError);
  EXPECT_THROW(log_likelihood(symmetric_pair(1.0), DescriptorBag(2, {1.0, 2.0})), DimensionError);
}

TEST(LogLikelihood, DensityAtModeOfStandardNormal) {
  const GaussianMixture g(1, {1.0}, {2.0}, {1.0});
  EXPECT_NEAR(log_likelihood(g, DescriptorBag(1, {2.0, 2.0, 2.0})), -0.5 * std::log(2.0 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(log_likelihood(g, DescriptorBag(1, {2.0})), -0.9189385332046727, 1e-12);
}

TEST(LogLikelihood, PermutationInvariant) {
  Rng rng(4);
  auto bag = testing::random_bag(rng, 50, 2);
  std::vector<std::size_t> idx(50);
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  const GaussianMixture g(2, {0.4, 0.6}, {0, 0, 1, -1}, {1, 1, 2, 2});
  EXPECT_NEAR(log_likelihood(g, bag), log_likelihood(g, bag.subset(idx)), 1e-12);
}

TEST(LogLikelihood, GeneratingMixtureBeatsPerturbedOne) {
  const GaussianMixture truth(2, {0.3, 0.7}, {-2, 0, 3, 1}, {1.0, 0.5, 0.8, 1.5});
  Rng rng(17);
  std::vector<double> v;
  for (int t = 0; t < 20000; ++t) {
    const std::size_t c = rng.uniform() < 0.3 ? 0 : 1;
    for (std::size_t d = 0; d < 2; ++d) v.push_back(truth.mean(c)[d] + std::sqrt(truth.variance(c)[d]) * rng.normal());
  }
  const DescriptorBag bag(2, std::move(v));
  const GaussianMixture perturbed(2, {0.4, 0.6}, {-1.5, 0.2, 3.3, 1}, {1.2, 0.5, 0.8, 1.2});
  EXPECT_GT(log_likelihood(truth, bag), log_likelihood(perturbed, bag));
}

TEST(GmmSerialization, JsonRoundTripIsExact) {
  Rng rng(2);
  const auto g = fit_gmm(testing::random_bag(rng, 100, 3), 2);
  const auto back = gmm_from_json(gmm_to_json(g));
  EXPECT_EQ(back, g);
  EXPECT_EQ(back.id(), g.id());
}

}  // namespace
}  // namespace veritas
