#include "veritas/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>

#include "json.hpp"
#include "veritas/error.hpp"
#include "veritas/hash.hpp"
#include "veritas/random.hpp"

namespace veritas {

namespace {

// Absolute lower bound for variances in dimensions with zero spread.
constexpr double kMinVariance = 1e-12;
// Weight floor; keeps every component's weight strictly positive.
constexpr double kMinWeight = 1e-10;

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Seeded k-means++ followed by Lloyd iterations. Returns centers (K x D)
// and hard assignments.
std::pair<Matrix, std::vector<std::size_t>> kmeans(const Matrix& x, std::size_t k, int iterations,
                                                   Rng& rng) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  Matrix centers(k, d);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.index(n);
  for (std::size_t c = 0; c < k; ++c) {
    std::copy(x.row(pick).begin(), x.row(pick).end(), centers.row(c).begin());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = std::min(best[i], sq_dist(x.row(i), centers.row(c)));
      total += best[i];
    }
    if (c + 1 == k) break;
    if (total <= 0.0) {
      pick = rng.index(n);
      continue;
    }
    double r = rng.uniform() * total;
    pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      r -= best[i];
      if (r < 0.0) {
        pick = i;
        break;
      }
    }
  }

  std::vector<std::size_t> assign(n, 0);
  std::vector<double> dist(n, 0.0);
  for (int it = 0; it <= iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dd = sq_dist(x.row(i), centers.row(c));
        if (dd < bd) {
          bd = dd;
          assign[i] = c;
        }
      }
      dist[i] = bd;
    }
    if (it == iterations) break;
    Matrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto s = sums.row(assign[i]);
      auto r = x.row(i);
      for (std::size_t j = 0; j < d; ++j) s[j] += r[j];
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Reseed an empty cluster at the point worst served by its center.
        const auto far = static_cast<std::size_t>(
            std::distance(dist.begin(), std::max_element(dist.begin(), dist.end())));
        std::copy(x.row(far).begin(), x.row(far).end(), centers.row(c).begin());
        dist[far] = 0.0;
        continue;
      }
      for (std::size_t j = 0; j < d; ++j) centers(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }
  }
  return {std::move(centers), std::move(assign)};
}

// E-step: fills responsibilities and returns the mean log-likelihood.
double expectation(const GaussianMixture& gmm, const Matrix& x, Matrix& resp) {
  double total = 0.0;
  for (std::size_t t = 0; t < x.rows(); ++t) {
    total += posteriors_into(gmm, x.row(t), resp.row(t));
  }
  return total / static_cast<double>(x.rows());
}

GaussianMixture maximization(const Matrix& x, const Matrix& resp, const GaussianMixture& prev,
                             std::span<const double> floor) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const std::size_t k = resp.cols();
  std::vector<double> nk(k, 0.0);
  std::vector<double> means(k * d, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    auto r = resp.row(t);
    auto xt = x.row(t);
    for (std::size_t c = 0; c < k; ++c) {
      nk[c] += r[c];
      double* m = means.data() + c * d;
      for (std::size_t j = 0; j < d; ++j) m[j] += r[c] * xt[j];
    }
  }
  const double tiny = 1e-12 * static_cast<double>(n);
  for (std::size_t c = 0; c < k; ++c) {
    double* m = means.data() + c * d;
    if (nk[c] > tiny) {
      for (std::size_t j = 0; j < d; ++j) m[j] /= nk[c];
    } else {
      std::copy(prev.mean(c).begin(), prev.mean(c).end(), m);
    }
  }
  std::vector<double> vars(k * d, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    auto r = resp.row(t);
    auto xt = x.row(t);
    for (std::size_t c = 0; c < k; ++c) {
      const double* m = means.data() + c * d;
      double* v = vars.data() + c * d;
      for (std::size_t j = 0; j < d; ++j) {
        const double dx = xt[j] - m[j];
        v[j] += r[c] * dx * dx;
      }
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    double* v = vars.data() + c * d;
    for (std::size_t j = 0; j < d; ++j) {
      v[j] = nk[c] > tiny ? std::max(v[j] / nk[c], floor[j]) : prev.variance(c)[j];
    }
  }
  std::vector<double> w(k);
  double wsum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    w[c] = std::max(nk[c] / static_cast<double>(n), kMinWeight);
    wsum += w[c];
  }
  for (auto& wc : w) wc /= wsum;
  return GaussianMixture(d, std::move(w), std::move(means), std::move(vars));
}

}  // namespace

void EmConfig::validate() const {
  if (max_iterations < 1) throw ConfigError("em: max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw ConfigError("em: tolerance must be > 0");
  if (!(variance_floor_factor > 0.0)) throw ConfigError("em: variance_floor_factor must be > 0");
  if (kmeans_iterations < 0) throw ConfigError("em: kmeans_iterations must be >= 0");
}

GaussianMixture::GaussianMixture(std::size_t dim, std::vector<double> weights,
                                 std::vector<double> means, std::vector<double> variances)
    : dim_(dim), weights_(std::move(weights)), means_(std::move(means)), variances_(std::move(variances)) {
  const std::size_t k = weights_.size();
  if (dim_ == 0 || k == 0) throw DataError("gmm: dimension and component count must be positive");
  if (means_.size() != k * dim_ || variances_.size() != k * dim_) {
    throw DimensionError("gmm: parameter arrays do not match K x D");
  }
  double wsum = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw DataError("gmm: weights must be positive");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw DataError("gmm: weights must sum to 1");
  for (double m : means_) {
    if (!std::isfinite(m)) throw DataError("gmm: non-finite mean");
  }
  for (double v : variances_) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DataError("gmm: variances must be positive and finite");
  }
  log_norm_.resize(k);
  inv_var_.resize(k * dim_);
  for (std::size_t c = 0; c < k; ++c) {
    double s = std::log(weights_[c]);
    for (std::size_t j = 0; j < dim_; ++j) {
      const double v = variances_[c * dim_ + j];
      s -= 0.5 * std::log(2.0 * std::numbers::pi * v);
      inv_var_[c * dim_ + j] = 1.0 / v;
    }
    log_norm_[c] = s;
  }
  Sha256 h;
  h.update("veritas-gmm:" + std::to_string(dim_) + ":" + std::to_string(k));
  h.update(weights_).update(means_).update(variances_);
  id_ = h.hex_digest().substr(0, 16);
}

void GaussianMixture::log_joint(std::span<const double> x, std::span<double> out) const {
  if (x.size() != dim_) {
    throw DimensionError("gmm: vector of dim " + std::to_string(x.size()) + ", mixture dim " +
                         std::to_string(dim_));
  }
  for (std::size_t c = 0; c < components(); ++c) {
    const double* m = means_.data() + c * dim_;
    const double* iv = inv_var_.data() + c * dim_;
    double q = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double dx = x[j] - m[j];
      q += dx * dx * iv[j];
    }
    out[c] = log_norm_[c] - 0.5 * q;
  }
}

double posteriors_into(const GaussianMixture& gmm, std::span<const double> x, std::span<double> out) {
  gmm.log_joint(x, out);
  const double lse = log_sum_exp(out);
  double s = 0.0;
  for (auto& v : out) {
    v = std::exp(v - lse);
    s += v;
  }
  for (auto& v : out) v /= s;
  return lse;
}

std::vector<double> posteriors(const GaussianMixture& gmm, std::span<const double> x) {
  std::vector<double> out(gmm.components());
  posteriors_into(gmm, x, out);
  return out;
}

std::vector<double> log_posteriors(const GaussianMixture& gmm, std::span<const double> x) {
  std::vector<double> out(gmm.components());
  gmm.log_joint(x, out);
  const double lse = log_sum_exp(out);
  for (auto& v : out) v -= lse;
  return out;
}

double log_likelihood(const GaussianMixture& gmm, const DescriptorBag& samples) {
  if (samples.dim() != gmm.dim()) {
    throw DimensionError("log_likelihood: bag dim " + std::to_string(samples.dim()) +
                         " != mixture dim " + std::to_string(gmm.dim()));
  }
  std::vector<double> lj(gmm.components());
  double total = 0.0;
  for (std::size_t t = 0; t < samples.size(); ++t) {
    gmm.log_joint(samples.row(t), lj);
    total += log_sum_exp(lj);
  }
  return total / static_cast<double>(samples.size());
}

GmmFitResult fit_gmm_traced(const DescriptorBag& samples, std::size_t components,
                            const EmConfig& config) {
  config.validate();
  const Matrix& x = samples.matrix();
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (components == 0) throw ConfigError("gmm: component count must be positive");
  if (n < components) {
    throw DegenerateDataError("gmm: " + std::to_string(n) + " samples for " +
                              std::to_string(components) + " components");
  }

  std::vector<double> mean(d, 0.0), data_var(d, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(t, j);
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dx = x(t, j) - mean[j];
      data_var[j] += dx * dx;
    }
  }
  bool all_constant = true;
  std::vector<double> floor(d);
  for (std::size_t j = 0; j < d; ++j) {
    data_var[j] /= static_cast<double>(n);
    all_constant = all_constant && data_var[j] == 0.0;
    floor[j] = std::max(config.variance_floor_factor * data_var[j], kMinVariance);
  }
  if (all_constant) throw DegenerateDataError("gmm: degenerate data, all rows are identical");

  Rng rng(config.seed);
  auto [centers, assign] = kmeans(x, components, config.kmeans_iterations, rng);

  // One M-step from the hard k-means assignment.
  Matrix resp(n, components, 0.0);
  for (std::size_t t = 0; t < n; ++t) resp(t, assign[t]) = 1.0;
  std::vector<double> init_var(components * d);
  for (std::size_t c = 0; c < components; ++c) {
    std::copy(data_var.begin(), data_var.end(), init_var.begin() + static_cast<std::ptrdiff_t>(c * d));
    for (std::size_t j = 0; j < d; ++j) init_var[c * d + j] = std::max(init_var[c * d + j], floor[j]);
  }
  GaussianMixture seed_mixture(d, std::vector<double>(components, 1.0 / static_cast<double>(components)),
                               centers.data(), std::move(init_var));
  GaussianMixture gmm = maximization(x, resp, seed_mixture, floor);

  GmmFitResult result{gmm, {}, 0, false};
  double ll = expectation(gmm, x, resp);
  result.log_likelihood_trace.push_back(ll);
  for (int it = 1; it <= config.max_iterations; ++it) {
    GaussianMixture next = maximization(x, resp, result.mixture, floor);
    const double next_ll = expectation(next, x, resp);
    result.mixture = std::move(next);
    result.log_likelihood_trace.push_back(next_ll);
    result.iterations = it;
    const double improvement = next_ll - ll;
    ll = next_ll;
    if (improvement < config.tolerance * std::abs(ll)) {
      result.converged = true;
      break;
    }
  }

  bool all_collapsed = true;
  for (std::size_t c = 0; c < components && all_collapsed; ++c) {
    for (std::size_t j = 0; j < d; ++j) {
      if (result.mixture.variance(c)[j] > floor[j]) {
        all_collapsed = false;
        break;
      }
    }
  }
  if (all_collapsed) {
    throw DegenerateDataError("gmm: degenerate data, every component collapsed onto the variance floor");
  }
  return result;
}

GaussianMixture fit_gmm(const DescriptorBag& samples, std::size_t components, const EmConfig& config) {
  return fit_gmm_traced(samples, components, config).mixture;
}

std::string gmm_to_json(const GaussianMixture& gmm) {
  nlohmann::json j = {{"format", "veritas-gmm"},
                      {"version", 1},
                      {"id", gmm.id()},
                      {"dim", gmm.dim()},
                      {"components", gmm.components()},
                      {"weights", gmm.weights()},
                      {"means", gmm.means()},
                      {"variances", gmm.variances()}};
  return j.dump();
}

GaussianMixture gmm_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    if (j.at("format") != "veritas-gmm") throw DataError("gmm json: wrong format tag");
    if (j.at("version") != 1) throw DataError("gmm json: unsupported version");
    const auto dim = j.at("dim").get<std::size_t>();
    const auto k = j.at("components").get<std::size_t>();
    auto w = j.at("weights").get<std::vector<double>>();
    auto m = j.at("means").get<std::vector<double>>();
    auto v = j.at("variances").get<std::vector<double>>();
    if (w.size() != k) throw DataError("gmm json: weights length != components");
    return GaussianMixture(dim, std::move(w), std::move(m), std::move(v));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("gmm json: ") + e.what());
  }
}

void save_gmm(const std::filesystem::path& path, const GaussianMixture& gmm) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << gmm_to_json(gmm) << '\n';
}

GaussianMixture load_gmm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return gmm_from_json(text);
}

}  // namespace veritas
