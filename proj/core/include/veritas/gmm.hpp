#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "veritas/descriptor_bag.hpp"

namespace veritas {

struct EmConfig {
  int max_iterations = 200;
  // Stop when the relative improvement of the mean log-likelihood drops
  // below this value.
  double tolerance = 1e-5;
  std::uint64_t seed = 0;
  // Per-dimension variance floor as a fraction of the data variance.
  double variance_floor_factor = 1e-4;
  int kmeans_iterations = 10;

  void validate() const;
};

/// K-component diagonal-covariance Gaussian mixture. Immutable once built.
/// Parameter arrays are row-major, one row of `dim()` entries per component.
class GaussianMixture {
 public:
  GaussianMixture(std::size_t dim, std::vector<double> weights, std::vector<double> means,
                  std::vector<double> variances);

  std::size_t dim() const { return dim_; }
  std::size_t components() const { return weights_.size(); }

  double weight(std::size_t k) const { return weights_[k]; }
  std::span<const double> mean(std::size_t k) const { return {means_.data() + k * dim_, dim_}; }
  std::span<const double> variance(std::size_t k) const {
    return {variances_.data() + k * dim_, dim_};
  }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& variances() const { return variances_; }

  // Content hash of the parameters; identifies the mixture in encodings.
  const std::string& id() const { return id_; }

  // out[k] = log(w_k) + log N(x; mu_k, diag(var_k)).
  void log_joint(std::span<const double> x, std::span<double> out) const;

  friend bool operator==(const GaussianMixture& a, const GaussianMixture& b) {
    return a.dim_ == b.dim_ && a.weights_ == b.weights_ && a.means_ == b.means_ &&
           a.variances_ == b.variances_;
  }

 private:
  std::size_t dim_;
  std::vector<double> weights_;
  std::vector<double> means_;
  std::vector<double> variances_;
  // log w_k - 0.5 * sum_d log(2 pi var_kd)
  std::vector<double> log_norm_;
  std::vector<double> inv_var_;
  std::string id_;
};

struct GmmFitResult {
  GaussianMixture mixture;
  // Mean log-likelihood after initialization, then after every EM iteration.
  std::vector<double> log_likelihood_trace;
  int iterations = 0;
  bool converged = false;
};

/// Fits a mixture by EM after seeded k-means++ / Lloyd initialization.
/// Throws DegenerateDataError when T < K or when every row is identical.
GmmFitResult fit_gmm_traced(const DescriptorBag& samples, std::size_t components,
                            const EmConfig& config = {});
GaussianMixture fit_gmm(const DescriptorBag& samples, std::size_t components,
                        const EmConfig& config = {});

// Component responsibilities for one vector, computed in the log domain.
std::vector<double> posteriors(const GaussianMixture& gmm, std::span<const double> x);
// Same, writing into `out` (size K) and returning log p(x).
double posteriors_into(const GaussianMixture& gmm, std::span<const double> x, std::span<double> out);
std::vector<double> log_posteriors(const GaussianMixture& gmm, std::span<const double> x);

// Mean per-sample log density of the bag.
double log_likelihood(const GaussianMixture& gmm, const DescriptorBag& samples);

// Versioned JSON: {"format":"veritas-gmm","version":1,"dim","components",
// "weights","means","variances"}; parameter arrays are row-major.
std::string gmm_to_json(const GaussianMixture& gmm);
GaussianMixture gmm_from_json(const std::string& text);
void save_gmm(const std::filesystem::path& path, const GaussianMixture& gmm);
GaussianMixture load_gmm(const std::filesystem::path& path);

}  // namespace veritas
