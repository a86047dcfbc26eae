#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "test_support.hpp"
#include "veritas/error.hpp"
#include "veritas/experiment.hpp"
#include "veritas/features.hpp"
#include "veritas/synthetic.hpp"
#include "veritas/transcript.hpp"

namespace veritas {
namespace {

// One small synthetic dataset, extracted once for the whole suite.
class ExperimentTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir;
    SyntheticConfig sc;
    sc.identities = 16;
    sc.min_videos_per_identity = 2;
    sc.max_videos_per_identity = 3;
    sc.seed = 4;
    sc.motion_dim = 9;
    sc.vocabulary = 80;
    data_ = new SyntheticDataset(write_synthetic_dataset(sc, dir_->path()));
    const auto table = load_embeddings(data_->extraction.embeddings_path);
    features_ = new std::vector<VideoFeatures>;
    for (std::size_t i = 0; i < data_->manifest.size(); ++i) {
      features_->push_back(extract_video(data_->manifest, i, data_->extraction, &table));
    }
  }
  static void TearDownTestSuite() {
    delete features_;
    delete data_;
    delete dir_;
  }

  static ExperimentConfig small_config() {
    ExperimentConfig c;
    c.motion_fv = {2};
    c.audio_fv = {2};
    c.transcript_fv = {2};
    c.folds = 4;
    c.seed = 3;
    c.fusion_step = 0.25;
    c.classifiers = {{ClassifierKind::kLinearSvm, {}}, {ClassifierKind::kNaiveBayes, {}}};
    return c;
  }

  static inline testing::TempDir* dir_ = nullptr;
  static inline SyntheticDataset* data_ = nullptr;
  static inline std::vector<VideoFeatures>* features_ = nullptr;
};

TEST_F(ExperimentTest, FullGridHasValuesInUnitInterval) {
  const auto report = run_experiment(data_->manifest, *features_, small_config());
  ASSERT_EQ(report.rows.size(), 8u);
  ASSERT_EQ(report.grid.size(), 8u);
  for (const auto& row : report.grid) {
    ASSERT_EQ(row.size(), 2u);
    for (const auto& cell : row) {
      EXPECT_GT(cell.pooled_auc, 0.0);
      EXPECT_LE(cell.pooled_auc, 1.0);
      EXPECT_EQ(cell.fold_auc.size(), 4u);
    }
  }
  EXPECT_EQ(report.videos.size(), data_->manifest.size());
  EXPECT_EQ(report.folds.size(), 4u);
  ASSERT_TRUE(report.value("All", ClassifierKind::kLinearSvm).has_value());
  EXPECT_FALSE(report.value("All", ClassifierKind::kAdaBoost).has_value());
}

TEST_F(ExperimentTest, EveryOutOfFoldScoreComesFromTheVideosOwnFold) {
  const auto report = run_experiment(data_->manifest, *features_, small_config());
  const auto assign = report.plan.assignments();
  for (const auto& v : report.videos) EXPECT_EQ(v.fold, assign.at(v.identity_id)) << v.video_id;
  EXPECT_NO_THROW(report.audit.verify());
  EXPECT_FALSE(report.audit.entries().empty());
  for (const auto& e : report.audit.entries()) {
    for (const auto& c : e.contributors) EXPECT_FALSE(report.audit.test_videos(e.fold).count(c)) << e.object;
  }
}

TEST_F(ExperimentTest, FusionWeightsLieOnTheSimplex) {
  const auto report = run_experiment(data_->manifest, *features_, small_config());
  EXPECT_FALSE(report.fusion.empty());
  for (const auto& f : report.fusion) {
    const auto& mask = report.rows[f.row].modalities;
    // The expression score shares the motion slot's mask only when enabled.
    EXPECT_NO_THROW(f.weights.validate(mask));
  }
}

TEST_F(ExperimentTest, OverlappingPlanAbortsWithLeakage) {
  auto plan = grouped_kfold(data_->manifest, 4, 3);
  plan.folds[0].train_identities.push_back(plan.folds[0].test_identities.front());
  std::sort(plan.folds[0].train_identities.begin(), plan.folds[0].train_identities.end());
  EXPECT_THROW(run_experiment(data_->manifest, *features_, small_config(), &plan), LeakageError);
}

TEST_F(ExperimentTest, DisabledModalitiesDropRows) {
  auto c = small_config();
  c.modalities = {true, false, false, false};
  const auto report = run_experiment(data_->manifest, *features_, c);
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_EQ(report.rows[0].name, "Motion");
}

TEST_F(ExperimentTest, GroundTruthExpressionsAndSubsetRun) {
  auto c = small_config();
  c.expressions = ExpressionSource::kGroundTruth;
  c.modalities = {true, false, false, true};
  const auto truth = run_experiment(data_->manifest, *features_, c);
  EXPECT_TRUE(truth.value("Expression", ClassifierKind::kLinearSvm).has_value());
  EXPECT_FALSE(truth.mean_detector_auc.has_value());

  c.expressions = ExpressionSource::kPredicted;
  c.expression_subset = ExpressionBits{"00011"};
  const auto sub = run_experiment(data_->manifest, *features_, c);
  ASSERT_TRUE(sub.value("Motion+Expression", ClassifierKind::kLinearSvm).has_value());
  EXPECT_NE(experiment_config_to_json(c).find("eyebrows-raise"), std::string::npos);
  EXPECT_EQ(experiment_config_to_json(c).find("head-side-turn"), std::string::npos);
}

TEST_F(ExperimentTest, SameSeedSameReport) {
  const auto a = run_experiment(data_->manifest, *features_, small_config());
  const auto b = run_experiment(data_->manifest, *features_, small_config());
  for (std::size_t r = 0; r < a.grid.size(); ++r) {
    for (std::size_t k = 0; k < a.grid[r].size(); ++k) EXPECT_EQ(a.grid[r][k].pooled_auc, b.grid[r][k].pooled_auc);
  }
  EXPECT_EQ(a.config_hash, b.config_hash);
}

TEST_F(ExperimentTest, FeatureCountMismatchRejected) {
  const std::vector<VideoFeatures> short_list(features_->begin(), features_->begin() + 3);
  EXPECT_THROW(run_experiment(data_->manifest, short_list, small_config()), Error);
}

TEST(ExperimentConfigValidation, BadSettingsRejected) {
  ExperimentConfig c;
  c.folds = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.expression_subset.reset();
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.modalities = {false, false, false, false};
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(table_rows().size(), 8u);
  EXPECT_EQ(default_classifier_specs().size(), 7u);
}

}  // namespace
}  // namespace veritas
