#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "veritas/error.hpp"
#include "veritas/models.hpp"
#include "veritas/random.hpp"

namespace veritas {

LinearSvm train_linear_svm(const Matrix& x, std::span<const int> y, const LinearSvmOptions& options) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (y.size() != n) throw DimensionError("linear svm: label count != row count");
  if (!(options.c > 0.0)) throw ConfigError("linear svm: C must be positive");

  std::vector<double> w(d, 0.0);
  double b = 0.0;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> qd(n);
  std::vector<double> sign(n);
  for (std::size_t i = 0; i < n; ++i) {
    qd[i] = dot(x.row(i), x.row(i)) + 1.0;
    sign[i] = y[i] == 1 ? 1.0 : -1.0;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(options.seed);

  const double c = options.c;
  for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
    rng.shuffle(order);
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (std::size_t i : order) {
      auto xi = x.row(i);
      const double g = sign[i] * (dot(w, xi) + b) - 1.0;
      double pg = g;
      if (alpha[i] == 0.0) {
        pg = std::min(g, 0.0);
      } else if (alpha[i] == c) {
        pg = std::max(g, 0.0);
      }
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (std::abs(pg) > 1e-12) {
        const double old = alpha[i];
        alpha[i] = std::clamp(old - g / qd[i], 0.0, c);
        const double step = (alpha[i] - old) * sign[i];
        for (std::size_t j = 0; j < d; ++j) w[j] += step * xi[j];
        b += step;
      }
    }
    if (pg_max - pg_min < options.tolerance) break;
  }
  return {std::move(w), b};
}

double linear_svm_objective(const LinearSvm& model, const Matrix& x, std::span<const int> y, double c) {
  double reg = dot(model.weights, model.weights) + model.bias * model.bias;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double s = y[i] == 1 ? 1.0 : -1.0;
    loss += std::max(0.0, 1.0 - s * model.decision(x.row(i)));
  }
  return 0.5 * reg + c * loss;
}

}  // namespace veritas
