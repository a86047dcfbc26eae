#include <cmath>
#include <deque>

#include "veritas/error.hpp"
#include "veritas/models.hpp"

namespace veritas {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

LbfgsResult minimize_lbfgs(const std::function<double(std::span<const double>, std::span<double>)>& fg,
                           std::vector<double> x0, int max_iterations, double tolerance, int memory) {
  const std::size_t n = x0.size();
  std::vector<double> x = std::move(x0), g(n), xn(n), gn(n), dir(n);
  double f = fg(x, g);
  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> hist;
  int it = 0;
  for (; it < max_iterations; ++it) {
    if (norm_inf(g) < tolerance) break;
    // Two-loop recursion.
    dir = g;
    std::vector<double> a(hist.size());
    for (std::size_t m = hist.size(); m-- > 0;) {
      a[m] = hist[m].rho * dot(hist[m].s, dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] -= a[m] * hist[m].y[i];
    }
    if (!hist.empty()) {
      const auto& last = hist.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (auto& v : dir) v *= gamma;
    }
    for (std::size_t m = 0; m < hist.size(); ++m) {
      const double b = hist[m].rho * dot(hist[m].y, dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] += (a[m] - b) * hist[m].s[i];
    }
    for (auto& v : dir) v = -v;
    double slope = dot(g, dir);
    if (slope >= 0.0) {
      // Not a descent direction: restart from steepest descent.
      hist.clear();
      for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
      slope = dot(g, dir);
    }
    double step = hist.empty() ? std::min(1.0, 1.0 / std::max(norm_inf(g), 1e-12)) : 1.0;
    double fn = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + step * dir[i];
      fn = fg(xn, gn);
      if (fn <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    Pair p{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      p.s[i] = xn[i] - x[i];
      p.y[i] = gn[i] - g[i];
    }
    const double sy = dot(p.s, p.y);
    x.swap(xn);
    g.swap(gn);
    const double df = f - fn;
    f = fn;
    if (sy > 1e-12) {
      p.rho = 1.0 / sy;
      hist.push_back(std::move(p));
      if (static_cast<int>(hist.size()) > memory) hist.pop_front();
    }
    if (df <= tolerance * std::max(1.0, std::abs(f)) * 1e-3) break;
  }
  return {std::move(x), f, it};
}

double LogisticRegression::probability(std::span<const double> x) const { return sigmoid(dot(weights, x) + bias); }

LogisticRegression train_logistic_regression(const Matrix& x, std::span<const int> y,
                                             const LogisticRegressionOptions& options) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (y.size() != n) throw DimensionError("logistic regression: label count != row count");
  if (n == 0) throw DegenerateDataError("logistic regression: no rows");
  if (options.l2 < 0.0) throw ConfigError("logistic regression: l2 must be >= 0");

  std::vector<double> z(n);
  auto fg = [&](std::span<const double> theta, std::span<double> grad) {
    const auto w = theta.subspan(0, d);
    const double b = theta[d];
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = dot(w, x.row(i)) + b;
      const double t = y[i] == 1 ? 1.0 : 0.0;
      loss += softplus(s) - t * s;
      const double r = sigmoid(s) - t;
      auto xi = x.row(i);
      for (std::size_t j = 0; j < d; ++j) grad[j] += r * xi[j];
      grad[d] += r;
    }
    const double inv = 1.0 / static_cast<double>(n);
    loss *= inv;
    for (auto& g : grad) g *= inv;
    for (std::size_t j = 0; j < d; ++j) {
      loss += 0.5 * options.l2 * w[j] * w[j];
      grad[j] += options.l2 * w[j];
    }
    return loss;
  };
  auto res = minimize_lbfgs(fg, std::vector<double>(d + 1, 0.0), options.max_iterations, options.tolerance);
  LogisticRegression lr;
  lr.bias = res.x[d];
  res.x.pop_back();
  lr.weights = std::move(res.x);
  return lr;
}

double PlattScaling::operator()(double score) const { return 1.0 / (1.0 + std::exp(a * score + b)); }

// Targets are smoothed toward 0.5 by the class counts, as in Platt's original recipe.
PlattScaling fit_platt(std::span<const double> scores, std::span<const int> y) {
  if (scores.size() != y.size()) throw DimensionError("platt: score count != label count");
  double npos = 0.0, nneg = 0.0;
  for (int v : y) (v == 1 ? npos : nneg) += 1.0;
  if (npos == 0.0 || nneg == 0.0) throw DegenerateDataError("platt: single-class labels");
  const double hi = (npos + 1.0) / (npos + 2.0);
  const double lo = 1.0 / (nneg + 2.0);
  auto fg = [&](std::span<const double> p, std::span<double> g) {
    g[0] = g[1] = 0.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double t = y[i] == 1 ? hi : lo;
      // p_i = sigmoid(-(a s + b)); loss = -t log p - (1-t) log(1-p)
      const double z = -(p[0] * scores[i] + p[1]);
      loss += softplus(z) - t * z;
      const double r = sigmoid(z) - t;
      g[0] -= r * scores[i];
      g[1] -= r;
    }
    return loss;
  };
  const double b0 = std::log((nneg + 1.0) / (npos + 1.0));
  auto res = minimize_lbfgs(fg, {0.0, b0}, 200, 1e-10);
  return {res.x[0], res.x[1]};
}

}  // namespace veritas
