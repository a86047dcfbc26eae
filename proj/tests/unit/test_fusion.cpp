#include <gtest/gtest.h>

#include <algorithm>

#include "veritas/error.hpp"
#include "veritas/fusion.hpp"
#include "veritas/metrics.hpp"
#include "veritas/random.hpp"

namespace veritas {
namespace {

FusionWeights w(double a, double b, double c, double d) { return FusionWeights{{a, b, c, d}}; }

TEST(Fuse, CornerReturnsThatModality) {
  const ModalityScores s{0.3, -2.0, 5.0, 1.5};
  EXPECT_EQ(fuse(s, w(1, 0, 0, 0)), 0.3);
  EXPECT_EQ(fuse(s, w(0, 0, 1, 0)), 5.0);
  EXPECT_DOUBLE_EQ(fuse(s, w(0.25, 0.25, 0.25, 0.25)), (0.3 - 2.0 + 5.0 + 1.5) / 4.0);
}

TEST(FusionWeightsValidation, SimplexAndMask) {
  EXPECT_NO_THROW(w(0.5, 0.5, 0, 0).validate());
  EXPECT_THROW(w(0.5, 0.6, 0, 0).validate(), Error);
  EXPECT_THROW(w(1.2, -0.2, 0, 0).validate(), Error);
  EXPECT_THROW(w(0.5, 0.5, 0, 0).validate({true, false, true, true}), Error);
  EXPECT_NEAR(w(0.25, 0.25, 0.25, 0.25).entropy(), std::log(4.0), 1e-12);
  EXPECT_EQ(w(1, 0, 0, 0).entropy(), 0.0);
}

TEST(SimplexGrid, SizesMatchStarsAndBars) {
  EXPECT_EQ(simplex_grid(0.5).size(), 10u);
  EXPECT_EQ(simplex_grid(0.05).size(), 1771u);
  EXPECT_EQ(simplex_grid(1.0).size(), 4u);
  EXPECT_EQ(simplex_grid(0.05, {true, false, true, false}).size(), 21u);
  EXPECT_THROW(simplex_grid(1.5), ConfigError);
}

TEST(SimplexGrid, EveryPointIsValidAndCornersPresent) {
  const ModalityMask mask{true, true, false, true};
  const auto grid = simplex_grid(0.1, mask);
  for (const auto& g : grid) EXPECT_NO_THROW(g.validate(mask));
  for (std::size_t m = 0; m < kModalityCount; ++m) {
    if (!mask[m]) continue;
    FusionWeights corner{{0, 0, 0, 0}};
    corner.alpha[m] = 1.0;
    EXPECT_NE(std::find(grid.begin(), grid.end(), corner), grid.end()) << m;
  }
}

struct Scores {
  std::vector<ModalityScores> s;
  std::vector<int> y;
};

Scores noisy(std::uint64_t seed, std::size_t n, std::array<double, 4> signal) {
  Rng rng(seed);
  Scores d;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    ModalityScores s{};
    for (std::size_t m = 0; m < 4; ++m) s[m] = signal[m] * (y ? 1.0 : -1.0) + rng.normal();
    d.s.push_back(s);
    d.y.push_back(y);
  }
  return d;
}

double fused_auc(const Scores& d, const FusionWeights& weights) {
  std::vector<double> f;
  for (const auto& s : d.s) f.push_back(fuse(s, weights));
  return auc_pr(f, d.y);
}

TEST(SearchWeights, PerfectModalityReachesOne) {
  auto d = noisy(1, 60, {0.0, 0.2, 0.2, 0.2});
  for (std::size_t i = 0; i < d.s.size(); ++i) d.s[i][2] = d.y[i] ? 10.0 + i : -10.0 - i;
  const auto r = search_weights_detailed(d.s, d.y, 0.1);
  EXPECT_DOUBLE_EQ(r.auc, 1.0);
  EXPECT_EQ(r.grid_size, simplex_grid(0.1).size());
}

TEST(SearchWeights, IdenticalModalitiesGiveUniformWeights) {
  Rng rng(2);
  Scores d;
  for (int i = 0; i < 40; ++i) {
    const double v = rng.normal() + (i % 2);
    d.s.push_back({v, v, v, v});
    d.y.push_back(i % 2);
  }
  EXPECT_EQ(search_weights(d.s, d.y, 0.25), w(0.25, 0.25, 0.25, 0.25));
}

TEST(SearchWeights, NeverWorseThanAnyCorner) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto d = noisy(seed, 50, {0.5, 0.3, 0.8, 0.1});
    const auto r = search_weights_detailed(d.s, d.y, 0.1);
    EXPECT_NEAR(fused_auc(d, r.weights), r.auc, 1e-12);
    for (std::size_t m = 0; m < 4; ++m) {
      FusionWeights corner{{0, 0, 0, 0}};
      corner.alpha[m] = 1.0;
      EXPECT_GE(r.auc, fused_auc(d, corner) - 1e-12);
    }
  }
}

TEST(SearchWeights, RespectsMask) {
  const auto d = noisy(3, 50, {0.1, 2.0, 0.1, 0.1});
  const ModalityMask mask{true, false, true, true};
  const auto weights = search_weights(d.s, d.y, 0.1, mask);
  EXPECT_EQ(weights.alpha[1], 0.0);
  EXPECT_NO_THROW(weights.validate(mask));
}

TEST(Fuse, RankingInvariantUnderCommonAffineMap) {
  const auto d = noisy(4, 80, {0.4, 0.4, 0.4, 0.4});
  auto mapped = d;
  for (auto& s : mapped.s) {
    for (auto& v : s) v = 3.5 * v - 12.0;
  }
  for (const auto& weights : simplex_grid(0.25)) EXPECT_NEAR(fused_auc(d, weights), fused_auc(mapped, weights), 1e-12);
}

TEST(ScoreStandardizerFit, ZeroMeanUnitVarianceAndConstantColumn) {
  auto d = noisy(5, 30, {1.0, 1.0, 1.0, 1.0});
  for (auto& s : d.s) s[3] = 7.0;
  const auto z = ScoreStandardizer::fit(d.s);
  ModalityScores mean{}, sq{};
  for (const auto& s : d.s) {
    const auto t = z.apply(s);
    for (std::size_t m = 0; m < 4; ++m) {
      mean[m] += t[m] / d.s.size();
      sq[m] += t[m] * t[m] / d.s.size();
    }
  }
  for (std::size_t m = 0; m < 3; ++m) {
    EXPECT_NEAR(mean[m], 0.0, 1e-12);
    EXPECT_NEAR(sq[m], 1.0, 1e-9);
  }
  EXPECT_NEAR(mean[3], 0.0, 1e-12);
  EXPECT_EQ(z.scale[3], 1.0);
}

TEST(ModalityNames, ParseRoundTrip) {
  for (auto m : kAllModalities) EXPECT_EQ(parse_modality(to_string(m)), m);
  EXPECT_THROW(parse_modality("smell"), ConfigError);
}

}  // namespace
}  // namespace veritas
