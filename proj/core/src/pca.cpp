#include "veritas/pca.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "veritas/error.hpp"

namespace veritas {

DescriptorBag PcaProjection::apply(const DescriptorBag& bag) const {
  if (bag.dim() != input_dim()) {
    throw DimensionError("pca: bag dim " + std::to_string(bag.dim()) + " != " +
                         std::to_string(input_dim()));
  }
  Matrix out(bag.size(), output_dim());
  std::vector<double> centered(input_dim());
  for (std::size_t t = 0; t < bag.size(); ++t) {
    auto x = bag.row(t);
    for (std::size_t j = 0; j < input_dim(); ++j) centered[j] = x[j] - mean_[j];
    for (std::size_t r = 0; r < output_dim(); ++r) out(t, r) = dot(axes_.row(r), centered);
  }
  return DescriptorBag(std::move(out), bag.timestamps());
}

PcaProjection fit_pca(const DescriptorBag& samples, std::size_t output_dim) {
  const std::size_t d = samples.dim();
  if (output_dim == 0 || output_dim > d) {
    throw ConfigError("pca: output dim must lie in [1, " + std::to_string(d) + "]");
  }
  const std::size_t n = samples.size();
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      samples.matrix().data().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - mean;
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw DegenerateDataError("pca: eigen decomposition failed");

  Matrix axes(output_dim, d);
  for (std::size_t r = 0; r < output_dim; ++r) {
    // Eigen sorts eigenvalues ascending.
    Eigen::VectorXd v = eig.eigenvectors().col(static_cast<Eigen::Index>(d - 1 - r));
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    for (std::size_t j = 0; j < d; ++j) axes(r, j) = v(static_cast<Eigen::Index>(j));
  }
  std::vector<double> mu(d);
  for (std::size_t j = 0; j < d; ++j) mu[j] = mean(static_cast<Eigen::Index>(j));
  return PcaProjection(std::move(mu), std::move(axes));
}

}  // namespace veritas
