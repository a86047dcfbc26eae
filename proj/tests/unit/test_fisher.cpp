#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "test_support.hpp"
#include "veritas/error.hpp"
#include "veritas/fisher.hpp"

namespace veritas {
namespace {

GaussianMixture random_mixture(Rng& rng, std::size_t k, std::size_t d) {
  std::vector<double> w(k), mu(k * d), var(k * d);
  double s = 0.0;
  for (auto& v : w) s += (v = rng.uniform(0.1, 1.0));
  for (auto& v : w) v /= s;
  for (auto& v : mu) v = 2.0 * rng.normal();
  for (auto& v : var) v = rng.uniform(0.2, 2.5);
  return GaussianMixture(d, w, mu, var);
}

// Unoptimized evaluation of the two gradient formulas, straight from their
// definitions: explicit Gaussian densities, posteriors by normalization.
std::vector<double> direct_fisher(const GaussianMixture& g, const DescriptorBag& bag) {
  const std::size_t k = g.components(), d = g.dim(), t_count = bag.size();
  std::vector<double> out(2 * k * d, 0.0);
  for (std::size_t t = 0; t < t_count; ++t) {
    const auto x = bag.row(t);
    std::vector<long double> dens(k);
    long double total = 0.0L;
    for (std::size_t c = 0; c < k; ++c) {
      long double p = g.weight(c);
      for (std::size_t j = 0; j < d; ++j) {
        const long double v = g.variance(c)[j], z = x[j] - g.mean(c)[j];
        p *= std::exp(-0.5L * z * z / v) / std::sqrt(2.0L * 3.141592653589793238462643383279L * v);
      }
      dens[c] = p;
      total += p;
    }
    for (std::size_t c = 0; c < k; ++c) {
      const double gamma = static_cast<double>(dens[c] / total);
      for (std::size_t j = 0; j < d; ++j) {
        const double sigma = std::sqrt(g.variance(c)[j]);
        const double u = (x[j] - g.mean(c)[j]) / sigma;
        out[c * d + j] += gamma * u / (t_count * std::sqrt(g.weight(c)));
        out[(k + c) * d + j] += gamma * (u * u - 1.0) / (t_count * std::sqrt(2.0 * g.weight(c)));
      }
    }
  }
  return out;
}

TEST(Fisher, MatchesDirectEvaluationOnRandomInstances) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.index(3), d = 1 + rng.index(4), t = 1 + rng.index(20);
    const auto g = random_mixture(rng, k, d);
    const auto bag = testing::random_bag(rng, t, d, 2.0);
    const auto fv = encode_fisher(g, bag);
    const auto ref = direct_fisher(g, bag);
    ASSERT_EQ(fv.values.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(fv.values[i], ref[i], 1e-10) << "trial " << trial;
  }
}

TEST(Fisher, MeanGradientVanishesWhenAllRowsSitAtTheMean) {
  const GaussianMixture g(2, {1.0}, {1.5, -0.5}, {2.0, 0.3});
  const auto fv = encode_fisher(g, DescriptorBag(2, {1.5, -0.5, 1.5, -0.5, 1.5, -0.5}));
  EXPECT_EQ(fv.values[fv.mean_index(0, 0)], 0.0);
  EXPECT_EQ(fv.values[fv.mean_index(0, 1)], 0.0);
}

TEST(Fisher, SymmetricPairAtOneSigmaGivesZeroVector) {
  const GaussianMixture g(1, {1.0}, {3.0}, {1.0});
  const auto fv = encode_fisher(g, DescriptorBag(1, {2.0, 4.0}));
  EXPECT_EQ(fv.values, (std::vector<double>{0.0, 0.0}));
}

TEST(Fisher, LengthIsTwoDK) {
  Rng rng(1);
  const auto fv = encode_fisher(random_mixture(rng, 3, 2), testing::random_bag(rng, 7, 2));
  EXPECT_EQ(fv.values.size(), 12u);
  EXPECT_FALSE(fv.normalized);
  EXPECT_EQ(fv.sigma_index(0, 0), 6u);
  EXPECT_EQ(fv.mean_index(2, 1), 5u);
}

TEST(Fisher, RowPermutationAndDuplicationInvariant) {
  Rng rng(6);
  const auto g = random_mixture(rng, 3, 3);
  const auto bag = testing::random_bag(rng, 15, 3);
  const auto base = encode_fisher(g, bag);
  std::vector<std::size_t> idx(15);
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  const auto shuffled = encode_fisher(g, bag.subset(idx));
  const DescriptorBag* twice[] = {&bag, &bag};
  const auto doubled = encode_fisher(g, concatenate(twice));
  for (std::size_t i = 0; i < base.values.size(); ++i) {
    EXPECT_NEAR(shuffled.values[i], base.values[i], 1e-12);
    EXPECT_NEAR(doubled.values[i], base.values[i], 1e-12);
  }
}

TEST(Fisher, EncodesMixtureIdentity) {
  Rng rng(3);
  const auto g = random_mixture(rng, 2, 2);
  EXPECT_EQ(encode_fisher(g, testing::random_bag(rng, 3, 2)).gmm_id, g.id());
}

TEST(Fisher, DimensionMismatchRejected) {
  Rng rng(3);
  EXPECT_THROW(encode_fisher(random_mixture(rng, 2, 2), testing::random_bag(rng, 3, 3)), DimensionError);
}

FisherVector raw(std::vector<double> v) {
  FisherVector fv;
  fv.values = std::move(v);
  fv.dim = 1;
  fv.components = fv.values.size() / 2;
  return fv;
}

TEST(NormalizeFv, Examples) {
  const auto a = normalize_fv(raw({3.0, 4.0}), 1.0);
  EXPECT_NEAR(a.values[0], 0.6, 1e-15);
  EXPECT_NEAR(a.values[1], 0.8, 1e-15);
  EXPECT_TRUE(a.normalized);

  const auto b = normalize_fv(raw({-4.0, 0.0}), 0.5);
  EXPECT_NEAR(b.values[0], -1.0, 1e-15);
  EXPECT_EQ(b.values[1], 0.0);

  const auto c = normalize_fv(raw({0.6, -0.8}), 1.0);
  EXPECT_NEAR(c.values[0], 0.6, 1e-15);
  EXPECT_NEAR(c.values[1], -0.8, 1e-15);

  EXPECT_EQ(normalize_fv(raw({0.0, 0.0}), 0.5).values, (std::vector<double>{0.0, 0.0}));
}

TEST(NormalizeFv, RejectsNormalizedInputAndBadAlpha) {
  EXPECT_THROW(normalize_fv(normalize_fv(raw({1.0, 2.0}), 0.5), 0.5), Error);
  EXPECT_THROW(normalize_fv(raw({1.0, 2.0}), 0.0), ConfigError);
  EXPECT_THROW(normalize_fv(raw({1.0, 2.0}), 1.5), ConfigError);
}

TEST(FisherSerialization, BinaryRoundTripAndCsv) {
  Rng rng(12);
  const auto g = random_mixture(rng, 2, 3);
  const auto fv = encode_fisher(g, testing::random_bag(rng, 9, 3));
  std::stringstream ss;
  write_fv_binary(ss, fv);
  EXPECT_EQ(read_fv_binary(ss), fv);
  std::ostringstream csv;
  write_fv_csv(csv, fv);
  const auto text = csv.str();
  EXPECT_EQ(text.rfind("block,component,dim,value\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), fv.values.size() + 1);
}

}  // namespace
}  // namespace veritas
