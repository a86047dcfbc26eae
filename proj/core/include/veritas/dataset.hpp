#pragma once

#include <bitset>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "veritas/descriptor_bag.hpp"

namespace veritas {

inline constexpr std::size_t kExpressionCount = 5;

// One bit per expression, in the order of `Expression` (microexpression.hpp).
using ExpressionBits = std::bitset<kExpressionCount>;

/// One trial video. Paths are stored exactly as written in the manifest;
/// use DatasetManifest::resolve to turn them into filesystem paths.
struct VideoRecord {
  std::string video_id;
  std::string identity_id;
  int label = 0;  // 1 = deceptive, 0 = truthful
  std::string motion_path;
  std::string audio_path;
  std::string transcript_path;
  // Per-clip annotations, index-aligned with segment_clips output.
  std::optional<std::vector<ExpressionBits>> clip_expression_labels;
  // Video-level annotation (ground-truth expression features, or the
  // source for broadcasting to clips when per-clip labels are absent).
  std::optional<ExpressionBits> video_expression_labels;
  // Length of the video in frames; defaults to last descriptor frame + 1.
  std::optional<std::int64_t> frame_count;

  friend bool operator==(const VideoRecord&, const VideoRecord&) = default;
};

class DatasetManifest {
 public:
  DatasetManifest() = default;
  // Validates uniqueness of video ids and presence of both classes.
  DatasetManifest(std::vector<VideoRecord> records, std::filesystem::path base_dir);

  const std::vector<VideoRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  const VideoRecord& operator[](std::size_t i) const { return records_[i]; }

  const std::map<int, std::size_t>& class_counts() const { return class_counts_; }
  // identity -> indices into records(), in record order.
  const std::map<std::string, std::vector<std::size_t>>& identities() const { return identities_; }
  std::optional<std::size_t> find(const std::string& video_id) const;

  const std::filesystem::path& base_dir() const { return base_dir_; }
  std::filesystem::path resolve(const std::string& path) const;

  friend bool operator==(const DatasetManifest& a, const DatasetManifest& b) {
    return a.records_ == b.records_ && a.class_counts_ == b.class_counts_;
  }

 private:
  std::vector<VideoRecord> records_;
  std::map<int, std::size_t> class_counts_;
  std::map<std::string, std::vector<std::size_t>> identities_;
  std::map<std::string, std::size_t> by_video_;
  std::filesystem::path base_dir_;
};

/// JSON-lines manifest, one VideoRecord per line. Relative paths resolve
/// against the manifest's directory. Errors carry the 1-based line number.
DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Inclusive column interval of a descriptor text file.
struct ColumnRange {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t width() const { return last - first + 1; }
  friend bool operator==(const ColumnRange&, const ColumnRange&) = default;
};

// Column layout of the dense-trajectory tool's text output (436 columns):
//   0..9     frameNum mean_x mean_y var_x var_y length scale x_pos y_pos t_pos
//   10..39   trajectory shape (15 points x 2)
//   40..135  HOG (96)
//   136..243 HOF (108)
//   244..339 MBHx (96)
//   340..435 MBHy (96)
namespace idt {
inline constexpr std::size_t kColumnCount = 436;
inline constexpr std::size_t kFrameColumn = 0;
inline constexpr ColumnRange kTrajectory{10, 39};
inline constexpr ColumnRange kHog{40, 135};
inline constexpr ColumnRange kHof{136, 243};
inline constexpr ColumnRange kMbhX{244, 339};
inline constexpr ColumnRange kMbhY{340, 435};
inline constexpr ColumnRange kMbh{244, 435};
}  // namespace idt

/// Reads whitespace-separated descriptor rows, keeping `columns`. When
/// `frame_column` is set, that column becomes the row timestamp (frame index).
DescriptorBag load_trajectory_descriptors(const std::filesystem::path& path, ColumnRange columns,
                                          std::optional<std::size_t> frame_column = std::nullopt);

}  // namespace veritas
