#pragma once

// Identity-grouped cross-validated evaluation of every (feature set x
// classifier) cell, with per-fold dictionaries, detectors, classifiers and
// fusion weights all fit on training identities only.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "veritas/classifiers.hpp"
#include "veritas/cross_validation.hpp"
#include "veritas/dataset.hpp"
#include "veritas/features.hpp"
#include "veritas/fusion.hpp"
#include "veritas/gmm.hpp"
#include "veritas/microexpression.hpp"

namespace veritas {

struct FvSettings {
  std::size_t components = 16;
  // Training rows pooled for the GMM are subsampled to at most this many.
  std::size_t max_gmm_samples = 20000;
  // Power + L2 normalization; off by default, enable for ablations.
  bool normalize = false;
  double power_alpha = 0.5;

  friend bool operator==(const FvSettings&, const FvSettings&) = default;
};

enum class ExpressionSource { kPredicted, kGroundTruth };
enum class AucAggregation { kPooled, kFoldMean };

struct FeatureRow {
  std::string name;
  ModalityMask modalities;
};

// Motion, Expression, Transcript, Audio, Motion+Expression,
// Motion+Expression+Transcript, Motion+Expression+Audio, All.
const std::vector<FeatureRow>& table_rows();

struct ExperimentConfig {
  FvSettings motion_fv{64};
  FvSettings audio_fv{64};
  FvSettings transcript_fv{16};
  EmConfig em;

  double fps = 15.0;
  double clip_seconds = 4.0;
  ExpressionSource expressions = ExpressionSource::kPredicted;
  // Use video-level expression labels for every clip when clip labels are absent.
  bool broadcast_video_labels = false;
  bool calibrate_detectors = false;
  double detector_c = 1.0;
  ExpressionBits expression_subset = ExpressionBits{}.set();

  std::vector<ClassifierSpec> classifiers;  // empty: default_classifier_specs()
  ModalityMask modalities = kAllEnabled;

  int folds = 10;
  std::uint64_t seed = 0;
  int inner_folds = 3;
  double fusion_step = 0.05;
  AucAggregation aggregation = AucAggregation::kPooled;
  int workers = 1;

  void validate() const;
};

// All seven kinds with library defaults; the SVMs select C from {0.01, 0.1, 1, 10}.
std::vector<ClassifierSpec> default_classifier_specs();

// Canonical JSON (sorted keys) of every setting that affects results.
std::string experiment_config_to_json(const ExperimentConfig& config);

struct CellResult {
  double pooled_auc = 0.0;
  std::vector<std::optional<double>> fold_auc;  // nullopt: fold test set is single-class
  std::optional<double> mean_fold_auc;

  double value(AucAggregation a) const;
};

struct FoldDiagnostics {
  int fold = 0;
  std::vector<std::string> test_identities;
  std::size_t train_videos = 0;
  std::size_t train_positive = 0;
  std::size_t test_videos = 0;
  std::size_t test_positive = 0;
  std::map<std::string, std::string> gmm_ids;  // modality -> dictionary id
};

struct VideoOutcome {
  std::string video_id;
  std::string identity_id;
  int label = 0;
  int fold = -1;
  // Indexed [classifier]; raw out-of-fold scores of the single-modality models.
  std::vector<ModalityScores> modality_scores;
  // Indexed [classifier][row]; single rows repeat the raw score, fusion rows
  // hold the standardized weighted sum.
  std::vector<std::vector<double>> row_scores;
  std::optional<ExpressionScoreVector> expression_vector;
};

struct FusionRecord {
  int fold = 0;
  std::size_t row = 0;
  std::size_t classifier = 0;
  FusionWeights weights;
  double inner_auc = 0.0;
};

struct ExperimentReport {
  std::vector<FeatureRow> rows;
  std::vector<ClassifierSpec> classifiers;
  std::vector<std::vector<CellResult>> grid;  // [row][classifier]
  AucAggregation aggregation = AucAggregation::kPooled;

  std::vector<FoldDiagnostics> folds;
  std::vector<VideoOutcome> videos;  // manifest order
  std::vector<FusionRecord> fusion;

  std::array<std::optional<double>, kExpressionCount> detector_auc{};
  std::optional<double> mean_detector_auc;

  LeakageAudit audit;
  FoldPlan plan;
  std::string config_json;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> provenance;
  std::vector<std::string> warnings;

  // Headline value of a cell under the report's aggregation; nullopt when the row was not run.
  std::optional<double> value(std::string_view row, ClassifierKind kind) const;
};

// `features` is index-aligned with the manifest. When `plan` is null a plan
// is drawn with grouped_kfold(manifest, config.folds, config.seed).
// Throws LeakageError if any fitted object saw a test video.
ExperimentReport run_experiment(const DatasetManifest& manifest, std::span<const VideoFeatures> features,
                                const ExperimentConfig& config, const FoldPlan* plan = nullptr);

}  // namespace veritas
