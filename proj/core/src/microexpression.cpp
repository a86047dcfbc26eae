#include "veritas/microexpression.hpp"

#include <algorithm>
#include <cmath>

#include "veritas/error.hpp"

namespace veritas {

std::size_t parse_expression(std::string_view name) {
  for (std::size_t i = 0; i < kExpressionNames.size(); ++i) {
    if (kExpressionNames[i] == name) return i;
  }
  throw ConfigError("unknown expression '" + std::string(name) + "'");
}

std::vector<std::pair<std::int64_t, std::int64_t>> clip_windows(std::int64_t duration_frames, double fps,
                                                                double clip_seconds) {
  if (!(fps > 0.0) || !(clip_seconds > 0.0)) throw ConfigError("clip segmentation: fps and clip length must be > 0");
  const auto window = std::max<std::int64_t>(1, std::llround(fps * clip_seconds));
  if (duration_frames < 1) throw DataError("clip segmentation: empty video");
  const std::int64_t full = duration_frames / window;
  const std::int64_t rem = duration_frames % window;
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  if (full == 0) {
    out.emplace_back(0, duration_frames);
    return out;
  }
  for (std::int64_t c = 0; c < full; ++c) out.emplace_back(c * window, (c + 1) * window);
  if (rem * 2 >= window) {
    out.emplace_back(full * window, duration_frames);
  } else {
    out.back().second = duration_frames;
  }
  return out;
}

ClipSet segment_clips(const DescriptorBag& bag, double fps, double clip_seconds,
                      std::optional<std::int64_t> frame_count, std::string video_id) {
  if (!bag.has_timestamps()) throw DataError("clip segmentation: descriptor bag has no frame indices");
  const auto& ts = bag.timestamps();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] < 0) throw DataError("clip segmentation: negative frame index");
    if (i > 0 && ts[i] < ts[i - 1]) throw DataError("clip segmentation: frame indices decrease");
  }
  const std::int64_t duration = frame_count ? *frame_count : ts.back() + 1;
  const auto windows = clip_windows(duration, fps, clip_seconds);

  ClipSet set;
  set.video_id = std::move(video_id);
  std::size_t row = 0;
  for (std::size_t c = 0; c < windows.size(); ++c) {
    const bool last = c + 1 == windows.size();
    std::vector<std::size_t> rows;
    // Rows past the stated duration join the last clip.
    while (row < ts.size() && (last || ts[row] < windows[c].second)) rows.push_back(row++);
    Clip clip{windows[c].first, windows[c].second, std::nullopt};
    if (!rows.empty()) clip.bag = bag.subset(rows);
    set.clips.push_back(std::move(clip));
  }
  return set;
}

double ExpressionDetector::score(std::span<const double> clip_fv) const {
  if (!trainable) return 0.0;
  const double s = model->predict_score(clip_fv);
  return calibration ? (*calibration)(s) : s;
}

ExpressionScoreVector ExpressionDetectors::score_clip(std::span<const double> clip_fv) const {
  ExpressionScoreVector v{};
  for (std::size_t e = 0; e < kExpressionCount; ++e) v[e] = detectors[e].score(clip_fv);
  return v;
}

ExpressionDetectors train_expression_detectors(const Matrix& clip_fvs, std::span<const ExpressionBits> clip_labels,
                                               const DetectorOptions& options, std::span<const std::string> groups) {
  if (clip_labels.size() != clip_fvs.rows()) throw DimensionError("detectors: clip label count != clip count");
  ExpressionDetectors out;
  std::vector<int> y(clip_labels.size());
  for (std::size_t e = 0; e < kExpressionCount; ++e) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < clip_labels.size(); ++i) {
      y[i] = clip_labels[i][e] ? 1 : 0;
      pos += static_cast<std::size_t>(y[i]);
    }
    if (pos == 0 || pos == y.size()) {
      out.warnings.push_back("detector '" + std::string(kExpressionNames[e]) +
                             "' is untrainable (single-class clip labels); its score is fixed to 0");
      continue;
    }
    auto& det = out.detectors[e];
    det.model = train(options.spec, clip_fvs, y, groups);
    det.trainable = true;
    if (options.calibrate) {
      const auto s = det.model->predict_scores(clip_fvs);
      det.calibration = fit_platt(s, y);
    }
  }
  return out;
}

namespace {
Matrix stack(std::span<const FisherVector> fvs) {
  if (fvs.empty()) return Matrix();
  Matrix m(0, fvs.front().values.size());
  for (const auto& fv : fvs) {
    if (fv.values.size() != m.cols()) throw DimensionError("clip Fisher Vectors differ in length");
    m.append_row(fv.values);
  }
  return m;
}
}  // namespace

ExpressionDetectors train_expression_detectors(std::span<const FisherVector> clip_fvs,
                                               std::span<const ExpressionBits> clip_labels,
                                               const DetectorOptions& options) {
  return train_expression_detectors(stack(clip_fvs), clip_labels, options);
}

ExpressionScoreVector pool_clip_scores(std::span<const ExpressionScoreVector> clip_scores) {
  if (clip_scores.empty()) throw DataError("score_video: no clips");
  ExpressionScoreVector out{};
  std::vector<double> col(clip_scores.size());
  for (std::size_t e = 0; e < kExpressionCount; ++e) {
    for (std::size_t c = 0; c < clip_scores.size(); ++c) col[c] = clip_scores[c][e];
    std::sort(col.begin(), col.end());
    double s = 0.0;
    for (double v : col) s += v;
    out[e] = s / static_cast<double>(col.size());
  }
  return out;
}

ExpressionScoreVector score_video(const ExpressionDetectors& detectors, const Matrix& clip_fvs) {
  std::vector<ExpressionScoreVector> per;
  for (std::size_t c = 0; c < clip_fvs.rows(); ++c) per.push_back(detectors.score_clip(clip_fvs.row(c)));
  return pool_clip_scores(per);
}

ExpressionScoreVector score_video(const ExpressionDetectors& detectors, std::span<const FisherVector> clip_fvs) {
  std::vector<ExpressionScoreVector> per;
  for (const auto& fv : clip_fvs) per.push_back(detectors.score_clip(fv.values));
  return pool_clip_scores(per);
}

}  // namespace veritas
