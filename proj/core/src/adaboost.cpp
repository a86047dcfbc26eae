#include <cmath>

#include "veritas/error.hpp"
#include "veritas/models.hpp"

namespace veritas {

namespace {
// Weight given to a learner with zero weighted error before stopping.
constexpr double kPerfectAlpha = 10.0;
}

double AdaBoost::score_prefix(std::span<const double> x, std::size_t rounds) const {
  double s = 0.0;
  const std::size_t r = std::min(rounds, learners.size());
  for (std::size_t t = 0; t < r; ++t) s += alphas[t] * (learners[t].predict_positive(x) ? 1.0 : -1.0);
  return s;
}

double AdaBoost::score(std::span<const double> x) const { return score_prefix(x, learners.size()); }

AdaBoost train_adaboost(const Matrix& x, std::span<const int> y, const AdaBoostOptions& options) {
  const std::size_t n = x.rows();
  if (y.size() != n) throw DimensionError("adaboost: label count != row count");
  if (options.rounds < 1) throw ConfigError("adaboost: rounds must be >= 1");
  if (options.weak_learner_depth < 1) throw ConfigError("adaboost: weak learner depth must be >= 1");

  const PresortedColumns pre(x);
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  TreeOptions topt;
  topt.max_depth = options.weak_learner_depth;
  AdaBoost model;
  std::vector<char> correct(n);
  for (int t = 0; t < options.rounds; ++t) {
    DecisionTree h = grow_tree(x, y, w, topt, &pre);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      correct[i] = h.predict_positive(x.row(i)) == (y[i] == 1);
      if (!correct[i]) err += w[i];
    }
    if (err <= 0.0) {
      model.learners.push_back(std::move(h));
      model.alphas.push_back(kPerfectAlpha);
      break;
    }
    if (err >= 0.5) {
      if (model.learners.empty()) {
        model.learners.push_back(std::move(h));
        model.alphas.push_back(1e-6);
      }
      break;
    }
    const double alpha = 0.5 * std::log((1.0 - err) / err);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] *= std::exp(correct[i] ? -alpha : alpha);
      z += w[i];
    }
    for (auto& v : w) v /= z;
    model.learners.push_back(std::move(h));
    model.alphas.push_back(alpha);
  }
  return model;
}

}  // namespace veritas
