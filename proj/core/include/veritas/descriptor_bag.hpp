#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "veritas/matrix.hpp"

namespace veritas {

/// A variable-length set of fixed-dimension local feature vectors for one
/// video and one modality: trajectory descriptors, MFCC frames or word
/// vectors. Rows are finite; there is at least one row. Optional per-row
/// frame indices are carried for temporal segmentation.
class DescriptorBag {
 public:
  DescriptorBag(std::size_t dim, std::vector<double> values,
                std::vector<std::int64_t> timestamps = {});
  explicit DescriptorBag(Matrix rows, std::vector<std::int64_t> timestamps = {});

  std::size_t dim() const { return rows_.cols(); }
  std::size_t size() const { return rows_.rows(); }
  std::span<const double> row(std::size_t t) const { return rows_.row(t); }
  const Matrix& matrix() const { return rows_; }

  bool has_timestamps() const { return !timestamps_.empty(); }
  const std::vector<std::int64_t>& timestamps() const { return timestamps_; }

  // Rows at `indices`, in that order, with their timestamps.
  DescriptorBag subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const DescriptorBag&, const DescriptorBag&) = default;

 private:
  void validate() const;

  Matrix rows_;
  std::vector<std::int64_t> timestamps_;
};

// Stacks bags of equal dimension. Timestamps are dropped unless every bag
// carries them.
DescriptorBag concatenate(std::span<const DescriptorBag* const> bags);

// Binary dump: 8-byte header ('D','B', version, flags, u32 dim), u64 row
// count, row-major little-endian float64 values, then int64 timestamps when
// flag bit 0 is set.
void write_bag_binary(std::ostream& out, const DescriptorBag& bag);
DescriptorBag read_bag_binary(std::istream& in);
void save_bag(const std::filesystem::path& path, const DescriptorBag& bag);
DescriptorBag load_bag(const std::filesystem::path& path);

// Debug export: one row per line, timestamp first when present.
void write_bag_csv(std::ostream& out, const DescriptorBag& bag);

}  // namespace veritas
