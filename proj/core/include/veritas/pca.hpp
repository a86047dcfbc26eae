#pragma once

#include <cstddef>
#include <vector>

#include "veritas/descriptor_bag.hpp"

namespace veritas {

/// Linear projection onto the leading principal axes of a training bag.
/// Optional descriptor preprocessing before mixture fitting and encoding.
class PcaProjection {
 public:
  PcaProjection(std::vector<double> mean, Matrix axes) : mean_(std::move(mean)), axes_(std::move(axes)) {}

  std::size_t input_dim() const { return mean_.size(); }
  std::size_t output_dim() const { return axes_.rows(); }
  const Matrix& axes() const { return axes_; }

  DescriptorBag apply(const DescriptorBag& bag) const;

 private:
  std::vector<double> mean_;
  Matrix axes_;  // output_dim x input_dim, orthonormal rows
};

// Axes are ordered by decreasing variance; each axis is signed so that its
// largest-magnitude entry is positive.
PcaProjection fit_pca(const DescriptorBag& samples, std::size_t output_dim);

}  // namespace veritas
