#include <algorithm>
#include <cmath>

#include "veritas/error.hpp"
#include "veritas/models.hpp"
#include "veritas/random.hpp"

namespace veritas {

double RandomForest::score(std::span<const double> x) const {
  std::size_t votes = 0;
  for (const auto& t : trees) votes += t.predict_positive(x) ? 1 : 0;
  return static_cast<double>(votes) / static_cast<double>(trees.size());
}

RandomForest train_random_forest(const Matrix& x, std::span<const int> y, const RandomForestOptions& options) {
  if (options.tree_count < 1) throw ConfigError("random forest: tree_count must be >= 1");
  const std::size_t n = x.rows();
  const PresortedColumns pre(x);
  TreeOptions topt;
  topt.max_depth = options.max_depth;
  topt.min_samples_split = options.min_samples_split;
  topt.max_features = options.max_features > 0
                          ? options.max_features
                          : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(x.cols())))));
  RandomForest forest;
  forest.trees.reserve(static_cast<std::size_t>(options.tree_count));
  std::vector<double> counts(n);
  for (int t = 0; t < options.tree_count; ++t) {
    Rng rng(derive_seed(options.seed, 2 * static_cast<std::uint64_t>(t)));
    std::fill(counts.begin(), counts.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) counts[rng.index(n)] += 1.0;
    topt.seed = derive_seed(options.seed, 2 * static_cast<std::uint64_t>(t) + 1);
    forest.trees.push_back(grow_tree(x, y, counts, topt, &pre));
  }
  return forest;
}

}  // namespace veritas
