#include <algorithm>
#include <cmath>
#include <numbers>

#include "veritas/error.hpp"
#include "veritas/models.hpp"

namespace veritas {

GaussianNaiveBayes train_naive_bayes(const Matrix& x, std::span<const int> y) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (y.size() != n) throw DimensionError("naive bayes: label count != row count");

  GaussianNaiveBayes nb;
  for (std::size_t j = 0; j < d; ++j) {
    const double first = x(0, j);
    for (std::size_t i = 1; i < n; ++i) {
      if (x(i, j) != first) {
        nb.mask.push_back(j);
        break;
      }
    }
  }
  if (nb.mask.empty()) throw DegenerateDataError("naive bayes: every feature has zero variance");

  const std::size_t m = nb.mask.size();
  double count[2] = {0.0, 0.0};
  for (int c = 0; c < 2; ++c) {
    nb.mean[c].assign(m, 0.0);
    nb.var[c].assign(m, 0.0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int c = y[i] == 1 ? 1 : 0;
    count[c] += 1.0;
    for (std::size_t k = 0; k < m; ++k) nb.mean[c][k] += x(i, nb.mask[k]);
  }
  if (count[0] == 0.0 || count[1] == 0.0) throw DegenerateDataError("naive bayes: single-class labels");
  for (int c = 0; c < 2; ++c) {
    for (auto& v : nb.mean[c]) v /= count[c];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int c = y[i] == 1 ? 1 : 0;
    for (std::size_t k = 0; k < m; ++k) {
      const double dx = x(i, nb.mask[k]) - nb.mean[c][k];
      nb.var[c][k] += dx * dx;
    }
  }
  // Variance smoothing relative to the widest retained feature.
  double max_var = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    double mu = 0.0, s = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += x(i, nb.mask[k]);
    mu /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = x(i, nb.mask[k]) - mu;
      s += dx * dx;
    }
    max_var = std::max(max_var, s / static_cast<double>(n));
  }
  const double eps = 1e-9 * max_var;
  for (int c = 0; c < 2; ++c) {
    for (auto& v : nb.var[c]) v = v / count[c] + eps;
    nb.log_prior[c] = std::log(count[c] / static_cast<double>(n));
  }
  return nb;
}

double GaussianNaiveBayes::log_odds(std::span<const double> x) const {
  double ll[2] = {log_prior[0], log_prior[1]};
  for (int c = 0; c < 2; ++c) {
    for (std::size_t k = 0; k < mask.size(); ++k) {
      const double dx = x[mask[k]] - mean[c][k];
      ll[c] -= 0.5 * (std::log(2.0 * std::numbers::pi * var[c][k]) + dx * dx / var[c][k]);
    }
  }
  return ll[1] - ll[0];
}

}  // namespace veritas
