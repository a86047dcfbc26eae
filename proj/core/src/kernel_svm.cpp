#include <algorithm>
#include <cmath>
#include <limits>

#include "veritas/error.hpp"
#include "veritas/models.hpp"

namespace veritas {

namespace {
constexpr double kTau = 1e-12;
}

double KernelSvm::kernel(std::span<const double> a, std::span<const double> b) const {
  return std::pow(gamma * dot(a, b) + 1.0, degree);
}

double KernelSvm::decision(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < coef.size(); ++i) s += coef[i] * kernel(support_vectors.row(i), x);
  return s + bias;
}

// Dual: min 0.5 a'Qa - e'a  s.t. 0 <= a <= C, y'a = 0, with Q_ij = y_i y_j K_ij.
// Working pairs follow the maximal-violating / second-order gain rule.
KernelSvmSolution train_kernel_svm(const Matrix& x, std::span<const int> labels,
                                   const KernelSvmOptions& options) {
  const std::size_t n = x.rows();
  if (labels.size() != n) throw DimensionError("kernel svm: label count != row count");
  if (!(options.c > 0.0)) throw ConfigError("kernel svm: C must be positive");
  if (options.degree < 1) throw ConfigError("kernel svm: degree must be >= 1");

  KernelSvm proto;
  proto.degree = options.degree;
  proto.gamma = 1.0 / static_cast<double>(x.cols());

  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] == 1 ? 1.0 : -1.0;
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = proto.kernel(x.row(i), x.row(j));
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  auto q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * k(i, j); };

  const double c = options.c;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);
  auto is_upper = [&](std::size_t t) { return alpha[t] >= c; };
  auto is_lower = [&](std::size_t t) { return alpha[t] <= 0.0; };
  auto in_up = [&](std::size_t t) { return (y[t] > 0 && !is_upper(t)) || (y[t] < 0 && !is_lower(t)); };
  auto in_low = [&](std::size_t t) { return (y[t] > 0 && !is_lower(t)) || (y[t] < 0 && !is_upper(t)); };

  long iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(t) && -y[t] * grad[t] >= gmax) {
        gmax = -y[t] * grad[t];
        i = t;
      }
    }
    if (i == n) break;
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best_gain = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = y[t] * grad[t];
      gmax2 = std::max(gmax2, v);
      const double diff = gmax + v;
      if (diff > 0.0) {
        double a = k(i, i) + k(t, t) - 2.0 * k(i, t);
        if (a <= 0.0) a = kTau;
        const double gain = -(diff * diff) / a;
        if (gain <= best_gain) {
          best_gain = gain;
          j = t;
        }
      }
    }
    if (gmax + gmax2 < options.tolerance || j == n) break;

    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    if (y[i] != y[j]) {
      double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q(t, i) * dai + q(t, j) * daj;
  }

  // Bias from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (is_upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (is_lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      free_sum += yg;
      ++free_count;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (ub + lb) / 2.0;

  KernelSvmSolution sol{proto, alpha, iter};
  sol.model.bias = -rho;
  sol.model.support_vectors = Matrix(0, x.cols());
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) {
      sol.model.support_vectors.append_row(x.row(t));
      sol.model.coef.push_back(alpha[t] * y[t]);
    }
  }
  return sol;
}

}  // namespace veritas
