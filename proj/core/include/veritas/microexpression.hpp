#pragma once

// Two-level micro-expression features: fixed-length clips, one linear
// detector per expression on clip Fisher Vectors, and per-video mean pooling.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "veritas/classifiers.hpp"
#include "veritas/dataset.hpp"
#include "veritas/descriptor_bag.hpp"
#include "veritas/fisher.hpp"

namespace veritas {

inline constexpr std::array<std::string_view, kExpressionCount> kExpressionNames = {
    "frown", "eyebrows-raise", "lips-up", "lips-protruded", "head-side-turn"};

std::size_t parse_expression(std::string_view name);  // ConfigError on unknown names

using ExpressionScoreVector = std::array<double, kExpressionCount>;

struct Clip {
  std::int64_t begin_frame = 0;  // inclusive
  std::int64_t end_frame = 0;    // exclusive
  // Empty when no trajectory ends inside the window.
  std::optional<DescriptorBag> bag;
};

struct ClipSet {
  std::string video_id;
  std::vector<Clip> clips;
  std::size_t clip_count() const { return clips.size(); }
};

// Frame windows [begin, end) for a video of `duration_frames` frames.
// A remainder of at least half a window becomes its own short clip;
// a shorter one is absorbed by the last full clip.
std::vector<std::pair<std::int64_t, std::int64_t>> clip_windows(std::int64_t duration_frames, double fps,
                                                                double clip_seconds = 4.0);

// Duration is `frame_count` when given, else the largest timestamp + 1.
// Throws DataError when the bag has no timestamps, timestamps decrease, or
// a timestamp is negative.
ClipSet segment_clips(const DescriptorBag& bag, double fps, double clip_seconds = 4.0,
                      std::optional<std::int64_t> frame_count = std::nullopt, std::string video_id = {});

struct ExpressionDetector {
  bool trainable = false;
  std::optional<TrainedModel> model;
  std::optional<PlattScaling> calibration;

  // Raw margin, or calibrated probability when calibration is set; 0 when untrainable.
  double score(std::span<const double> clip_fv) const;
};

struct ExpressionDetectors {
  std::array<ExpressionDetector, kExpressionCount> detectors;
  std::vector<std::string> warnings;

  ExpressionScoreVector score_clip(std::span<const double> clip_fv) const;
};

struct DetectorOptions {
  ClassifierSpec spec{ClassifierKind::kLinearSvm, {}};
  bool calibrate = false;
};

// One-vs-rest detector per expression. An expression whose labels are all
// equal gets an untrainable detector (constant 0) and a warning.
ExpressionDetectors train_expression_detectors(const Matrix& clip_fvs, std::span<const ExpressionBits> clip_labels,
                                               const DetectorOptions& options = {},
                                               std::span<const std::string> groups = {});
ExpressionDetectors train_expression_detectors(std::span<const FisherVector> clip_fvs,
                                               std::span<const ExpressionBits> clip_labels,
                                               const DetectorOptions& options = {});

// Per-expression mean of clip scores. Summation runs over sorted values so
// the result does not depend on clip order. Throws DataError on zero clips.
ExpressionScoreVector score_video(const ExpressionDetectors& detectors, const Matrix& clip_fvs);
ExpressionScoreVector score_video(const ExpressionDetectors& detectors, std::span<const FisherVector> clip_fvs);
ExpressionScoreVector pool_clip_scores(std::span<const ExpressionScoreVector> clip_scores);

}  // namespace veritas
