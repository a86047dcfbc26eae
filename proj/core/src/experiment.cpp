#include "veritas/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <set>
#include <thread>

#include "json.hpp"
#include "veritas/error.hpp"
#include "veritas/fisher.hpp"
#include "veritas/hash.hpp"
#include "veritas/metrics.hpp"
#include "veritas/random.hpp"

namespace veritas {

using nlohmann::json;

const std::vector<FeatureRow>& table_rows() {
  static const std::vector<FeatureRow> rows = {
      {"Motion", {true, false, false, false}},
      {"Expression", {false, false, false, true}},
      {"Transcript", {false, true, false, false}},
      {"Audio", {false, false, true, false}},
      {"Motion+Expression", {true, false, false, true}},
      {"Motion+Expression+Transcript", {true, true, false, true}},
      {"Motion+Expression+Audio", {true, false, true, true}},
      {"All", {true, true, true, true}},
  };
  return rows;
}

std::vector<ClassifierSpec> default_classifier_specs() {
  std::vector<ClassifierSpec> specs;
  for (auto kind : kAllClassifierKinds) {
    ClassifierSpec s{kind, {}};
    if (kind == ClassifierKind::kLinearSvm || kind == ClassifierKind::kKernelSvm) s.hyper.c_grid = {0.01, 0.1, 1.0, 10.0};
    specs.push_back(s);
  }
  return specs;
}

void ExperimentConfig::validate() const {
  for (const FvSettings* fv : {&motion_fv, &audio_fv, &transcript_fv}) {
    if (fv->components < 1) throw ConfigError("GMM component count must be >= 1");
    if (fv->max_gmm_samples < 1) throw ConfigError("max GMM samples must be >= 1");
    if (!(fv->power_alpha > 0.0 && fv->power_alpha <= 1.0)) throw ConfigError("power normalization alpha must be in (0, 1]");
  }
  em.validate();
  if (!(fps > 0.0) || !(clip_seconds > 0.0)) throw ConfigError("fps and clip length must be positive");
  if (!(detector_c > 0.0)) throw ConfigError("detector C must be positive");
  if (expression_subset.none()) throw ConfigError("expression subset must name at least one expression");
  if (std::none_of(modalities.begin(), modalities.end(), [](bool b) { return b; })) {
    throw ConfigError("modality subset must be non-empty");
  }
  if (folds < 2) throw ConfigError("fold count must be >= 2");
  if (inner_folds < 2) throw ConfigError("inner fold count must be >= 2");
  simplex_grid(fusion_step);
  if (workers < 1) throw ConfigError("worker count must be >= 1");
  for (const auto& s : classifiers) s.validate();
}

namespace {

json fv_json(const FvSettings& fv) {
  return {{"components", fv.components},
          {"max_gmm_samples", fv.max_gmm_samples},
          {"normalize", fv.normalize},
          {"power_alpha", fv.power_alpha}};
}

std::vector<ClassifierSpec> effective_specs(const ExperimentConfig& c) {
  return c.classifiers.empty() ? default_classifier_specs() : c.classifiers;
}

std::vector<FeatureRow> active_rows(const ExperimentConfig& c) {
  std::vector<FeatureRow> out;
  for (const auto& r : table_rows()) {
    bool ok = true;
    for (std::size_t i = 0; i < kModalityCount; ++i) ok = ok && (!r.modalities[i] || c.modalities[i]);
    if (ok) out.push_back(r);
  }
  return out;
}

}  // namespace

std::string experiment_config_to_json(const ExperimentConfig& c) {
  json specs = json::array();
  for (const auto& s : effective_specs(c)) specs.push_back(json::parse(spec_to_json(s)));
  json mods = json::array();
  for (auto m : kAllModalities) {
    if (c.modalities[static_cast<std::size_t>(m)]) mods.push_back(to_string(m));
  }
  json subset = json::array();
  for (std::size_t e = 0; e < kExpressionCount; ++e) {
    if (c.expression_subset[e]) subset.push_back(kExpressionNames[e]);
  }
  json j = {
      {"fv", {{"motion", fv_json(c.motion_fv)}, {"audio", fv_json(c.audio_fv)}, {"transcript", fv_json(c.transcript_fv)}}},
      {"em",
       {{"max_iterations", c.em.max_iterations},
        {"tolerance", c.em.tolerance},
        {"variance_floor_factor", c.em.variance_floor_factor},
        {"kmeans_iterations", c.em.kmeans_iterations}}},
      {"fps", c.fps},
      {"clip_seconds", c.clip_seconds},
      {"expressions", c.expressions == ExpressionSource::kPredicted ? "predicted" : "ground-truth"},
      {"broadcast_video_labels", c.broadcast_video_labels},
      {"calibrate_detectors", c.calibrate_detectors},
      {"detector_c", c.detector_c},
      {"expression_subset", subset},
      {"classifiers", specs},
      {"modalities", mods},
      {"folds", c.folds},
      {"seed", c.seed},
      {"inner_folds", c.inner_folds},
      {"fusion_step", c.fusion_step},
      {"aggregation", c.aggregation == AucAggregation::kPooled ? "pooled" : "fold-mean"},
  };
  return j.dump();
}

double CellResult::value(AucAggregation a) const {
  if (a == AucAggregation::kFoldMean && mean_fold_auc) return *mean_fold_auc;
  return pooled_auc;
}

std::optional<double> ExperimentReport::value(std::string_view row, ClassifierKind kind) const {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].name != row) continue;
    for (std::size_t c = 0; c < classifiers.size(); ++c) {
      if (classifiers[c].kind == kind) return grid[r][c].value(aggregation);
    }
  }
  return std::nullopt;
}

namespace {

constexpr std::size_t kM = static_cast<std::size_t>(Modality::kMotion);
constexpr std::size_t kT = static_cast<std::size_t>(Modality::kTranscript);
constexpr std::size_t kA = static_cast<std::size_t>(Modality::kAudio);
constexpr std::size_t kE = static_cast<std::size_t>(Modality::kExpression);

struct FoldOutput {
  FoldDiagnostics diag;
  LeakageAudit audit;
  std::vector<std::size_t> test;
  // Indexed like `test`.
  std::vector<std::vector<ModalityScores>> modality_scores;
  std::vector<std::vector<std::vector<double>>> row_scores;
  std::vector<std::optional<ExpressionScoreVector>> expression;
  std::vector<FusionRecord> fusion;
  std::array<std::vector<double>, kExpressionCount> clip_scores;
  std::array<std::vector<int>, kExpressionCount> clip_labels;
  std::vector<std::string> warnings;
};

class FoldRunner {
 public:
  FoldRunner(const DatasetManifest& m, std::span<const VideoFeatures> f, const ExperimentConfig& c, const FoldPlan& p,
             const std::vector<ClassifierSpec>& specs, const std::vector<FeatureRow>& rows)
      : manifest_(m), features_(f), config_(c), plan_(p), specs_(specs), rows_(rows) {
    labels_.resize(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) labels_[i] = m[i].label;
  }

  FoldOutput run(int fold) {
    fold_ = fold;
    out_ = FoldOutput{};
    train_ = plan_.train_indices(manifest_, fold);
    out_.test = plan_.test_indices(manifest_, fold);
    const auto test_ids = video_ids(out_.test);
    out_.audit.set_test_videos(fold, std::set<std::string>(test_ids.begin(), test_ids.end()));
    diagnostics();

    enabled_ = config_.modalities;
    const bool predicted = config_.expressions == ExpressionSource::kPredicted;
    const bool need_motion_fv = enabled_[kM] || (enabled_[kE] && predicted);
    x_.assign(kModalityCount, Matrix());
    if (need_motion_fv) motion_gmm_.emplace(fit_dictionary("motion", &VideoFeatures::motion, config_.motion_fv, 0));
    if (enabled_[kM]) x_[kM] = encode_all(*motion_gmm_, &VideoFeatures::motion, config_.motion_fv);
    if (enabled_[kT]) {
      const auto g = fit_dictionary("transcript", &VideoFeatures::transcript, config_.transcript_fv, 1);
      x_[kT] = encode_all(g, &VideoFeatures::transcript, config_.transcript_fv);
    }
    if (enabled_[kA]) {
      const auto g = fit_dictionary("audio", &VideoFeatures::audio, config_.audio_fv, 2);
      x_[kA] = encode_all(g, &VideoFeatures::audio, config_.audio_fv);
    }
    if (enabled_[kE]) x_[kE] = predicted ? predicted_expressions() : ground_truth_expressions();

    out_.modality_scores.assign(out_.test.size(), std::vector<ModalityScores>(specs_.size(), ModalityScores{}));
    out_.row_scores.assign(out_.test.size(),
                           std::vector<std::vector<double>>(specs_.size(), std::vector<double>(rows_.size(), 0.0)));
    for (std::size_t c = 0; c < specs_.size(); ++c) run_classifier(c);
    return std::move(out_);
  }

 private:
  using BagField = std::optional<DescriptorBag> VideoFeatures::*;

  std::vector<std::string> video_ids(const std::vector<std::size_t>& idx) const {
    std::vector<std::string> ids;
    for (auto i : idx) ids.push_back(manifest_[i].video_id);
    return ids;
  }

  std::vector<std::string> identity_ids(const std::vector<std::size_t>& idx) const {
    std::vector<std::string> ids;
    for (auto i : idx) ids.push_back(manifest_[i].identity_id);
    return ids;
  }

  std::uint64_t seed_for(std::uint64_t tag) const {
    return derive_seed(config_.seed, (static_cast<std::uint64_t>(fold_) + 1) * 0x10000 + tag);
  }

  void diagnostics() {
    auto& d = out_.diag;
    d.fold = fold_;
    d.test_identities = plan_.folds[static_cast<std::size_t>(fold_)].test_identities;
    d.train_videos = train_.size();
    d.test_videos = out_.test.size();
    for (auto i : train_) d.train_positive += static_cast<std::size_t>(labels_[i]);
    for (auto i : out_.test) d.test_positive += static_cast<std::size_t>(labels_[i]);
    if (d.train_positive == 0 || d.train_positive == d.train_videos) {
      throw DataError("fold " + std::to_string(fold_) + ": training identities hold a single class");
    }
    if (d.test_positive == 0 || d.test_positive == d.test_videos) {
      out_.warnings.push_back("fold " + std::to_string(fold_) + ": test videos hold a single class");
    }
  }

  const DescriptorBag& bag(std::size_t video, BagField field, const char* name) const {
    const auto& b = features_[video].*field;
    if (!b) throw DataError("video " + manifest_[video].video_id + ": " + name + " features were not extracted");
    return *b;
  }

  GaussianMixture fit_dictionary(const char* name, BagField field, const FvSettings& fv, std::uint64_t tag) {
    std::vector<std::pair<std::size_t, std::size_t>> refs;
    for (auto v : train_) {
      const auto& b = bag(v, field, name);
      for (std::size_t r = 0; r < b.size(); ++r) refs.emplace_back(v, r);
    }
    if (refs.size() > fv.max_gmm_samples) {
      Rng rng(seed_for(100 + tag));
      // Partial Fisher-Yates: the first max_gmm_samples slots form the sample.
      for (std::size_t i = 0; i < fv.max_gmm_samples; ++i) std::swap(refs[i], refs[i + rng.index(refs.size() - i)]);
      refs.resize(fv.max_gmm_samples);
      std::sort(refs.begin(), refs.end());
    }
    const std::size_t dim = bag(train_.front(), field, name).dim();
    Matrix pooled(0, dim);
    for (const auto& [v, r] : refs) {
      const auto& b = bag(v, field, name);
      if (b.dim() != dim) throw DimensionError(std::string(name) + " descriptors differ in dimension across videos");
      pooled.append_row(b.row(r));
    }
    EmConfig em = config_.em;
    em.seed = seed_for(200 + tag);
    auto gmm = fit_gmm(DescriptorBag(std::move(pooled)), fv.components, em);
    out_.audit.record(fold_, std::string("gmm:") + name, video_ids(train_));
    out_.diag.gmm_ids[name] = gmm.id();
    return gmm;
  }

  std::vector<double> encode(const GaussianMixture& g, const DescriptorBag& b, const FvSettings& fv) const {
    auto v = encode_fisher(g, b);
    if (fv.normalize) v = normalize_fv(v, fv.power_alpha);
    return std::move(v.values);
  }

  Matrix encode_all(const GaussianMixture& g, BagField field, const FvSettings& fv) const {
    const std::size_t dim = 2 * g.dim() * g.components();
    Matrix x(manifest_.size(), dim);
    auto fill = [&](std::size_t v) {
      const auto row = encode(g, bag(v, field, "modality"), fv);
      std::copy(row.begin(), row.end(), x.row(v).begin());
    };
    for (auto v : train_) fill(v);
    for (auto v : out_.test) fill(v);
    return x;
  }

  Matrix select_expression_columns(const std::vector<ExpressionScoreVector>& per_video) const {
    std::vector<std::size_t> cols;
    for (std::size_t e = 0; e < kExpressionCount; ++e) {
      if (config_.expression_subset[e]) cols.push_back(e);
    }
    Matrix x(manifest_.size(), cols.size());
    for (std::size_t v = 0; v < per_video.size(); ++v) {
      for (std::size_t j = 0; j < cols.size(); ++j) x(v, j) = per_video[v][cols[j]];
    }
    return x;
  }

  Matrix ground_truth_expressions() {
    std::vector<ExpressionScoreVector> per(manifest_.size(), ExpressionScoreVector{});
    auto fill = [&](std::size_t v) {
      const auto& rec = manifest_[v];
      if (rec.video_expression_labels) {
        for (std::size_t e = 0; e < kExpressionCount; ++e) per[v][e] = (*rec.video_expression_labels)[e] ? 1.0 : 0.0;
      } else if (rec.clip_expression_labels && !rec.clip_expression_labels->empty()) {
        for (const auto& bits : *rec.clip_expression_labels) {
          for (std::size_t e = 0; e < kExpressionCount; ++e) per[v][e] += bits[e] ? 1.0 : 0.0;
        }
        for (auto& s : per[v]) s /= static_cast<double>(rec.clip_expression_labels->size());
      } else {
        throw DataError("video " + rec.video_id + ": ground-truth expression mode needs expression labels");
      }
    };
    for (auto v : train_) fill(v);
    for (auto v : out_.test) fill(v);
    for (std::size_t t = 0; t < out_.test.size(); ++t) expression_for_test_.push_back(per[out_.test[t]]);
    return select_expression_columns(per);
  }

  // Clip FVs of one video (non-empty clips only) and their labels when known.
  struct VideoClips {
    Matrix fvs;
    std::optional<std::vector<ExpressionBits>> labels;
  };

  VideoClips clips_for(std::size_t v) const {
    const auto& rec = manifest_[v];
    const auto set = segment_clips(bag(v, &VideoFeatures::motion, "motion"), config_.fps, config_.clip_seconds,
                                   rec.frame_count, rec.video_id);
    std::optional<std::vector<ExpressionBits>> all_labels;
    if (rec.clip_expression_labels) {
      if (rec.clip_expression_labels->size() != set.clip_count()) {
        throw DataError("video " + rec.video_id + ": " + std::to_string(rec.clip_expression_labels->size()) +
                        " clip label vectors for " + std::to_string(set.clip_count()) + " clips");
      }
      all_labels = *rec.clip_expression_labels;
    } else if (config_.broadcast_video_labels && rec.video_expression_labels) {
      all_labels = std::vector<ExpressionBits>(set.clip_count(), *rec.video_expression_labels);
    }
    VideoClips out{Matrix(0, 2 * motion_gmm_->dim() * motion_gmm_->components()), std::nullopt};
    if (all_labels) out.labels.emplace();
    for (std::size_t c = 0; c < set.clip_count(); ++c) {
      if (!set.clips[c].bag) continue;
      out.fvs.append_row(encode(*motion_gmm_, *set.clips[c].bag, config_.motion_fv));
      if (all_labels) out.labels->push_back((*all_labels)[c]);
    }
    return out;
  }

  ExpressionDetectors fit_detectors(const std::vector<std::size_t>& videos, const std::string& object,
                                    std::uint64_t tag) {
    Matrix x(0, 2 * motion_gmm_->dim() * motion_gmm_->components());
    std::vector<ExpressionBits> labels;
    std::vector<std::string> groups;
    for (auto v : videos) {
      const auto& vc = clips_[v];
      if (!vc.labels) {
        throw DataError("video " + manifest_[v].video_id + ": no clip expression labels for detector training");
      }
      for (std::size_t c = 0; c < vc.fvs.rows(); ++c) {
        x.append_row(vc.fvs.row(c));
        labels.push_back((*vc.labels)[c]);
        groups.push_back(manifest_[v].identity_id);
      }
    }
    if (x.rows() < 2) throw DataError("fold " + std::to_string(fold_) + ": too few clips to train expression detectors");
    DetectorOptions opt;
    opt.spec.kind = ClassifierKind::kLinearSvm;
    opt.spec.hyper.c = config_.detector_c;
    opt.spec.hyper.seed = seed_for(tag);
    opt.calibrate = config_.calibrate_detectors;
    auto det = train_expression_detectors(x, labels, opt, groups);
    out_.audit.record(fold_, object, video_ids(videos));
    return det;
  }

  std::optional<ExpressionScoreVector> pooled(const ExpressionDetectors& det, std::size_t v) {
    if (clips_[v].fvs.rows() == 0) return std::nullopt;
    return score_video(det, clips_[v].fvs);
  }

  Matrix predicted_expressions() {
    clips_.clear();
    for (auto v : train_) clips_.emplace(v, clips_for(v));
    for (auto v : out_.test) clips_.emplace(v, clips_for(v));

    std::vector<ExpressionScoreVector> per(manifest_.size(), ExpressionScoreVector{});
    auto missing = [&](std::size_t v) {
      out_.warnings.push_back("video " + manifest_[v].video_id + ": no non-empty clips; expression scores set to 0");
    };

    const auto full = fit_detectors(train_, "detectors", 300);
    for (const auto& w : full.warnings) out_.warnings.push_back("fold " + std::to_string(fold_) + ": " + w);
    for (auto v : out_.test) {
      auto s = pooled(full, v);
      if (s) per[v] = *s;
      else missing(v);
      expression_for_test_.push_back(s);
      const auto& vc = clips_[v];
      if (!vc.labels) continue;
      for (std::size_t c = 0; c < vc.fvs.rows(); ++c) {
        const auto cs = full.score_clip(vc.fvs.row(c));
        for (std::size_t e = 0; e < kExpressionCount; ++e) {
          if (!full.detectors[e].trainable) continue;
          out_.clip_scores[e].push_back(cs[e]);
          out_.clip_labels[e].push_back((*vc.labels)[c][e] ? 1 : 0);
        }
      }
    }

    // Training videos get scores from detectors that never saw them.
    const auto inner = inner_split(train_, 400);
    for (std::size_t g = 0; g < inner.size(); ++g) {
      std::vector<std::size_t> fit_on;
      for (std::size_t h = 0; h < inner.size(); ++h) {
        if (h != g) fit_on.insert(fit_on.end(), inner[h].begin(), inner[h].end());
      }
      std::sort(fit_on.begin(), fit_on.end());
      const auto det = fit_detectors(fit_on, "detectors:inner" + std::to_string(g), 500 + g);
      for (auto v : inner[g]) {
        auto s = pooled(det, v);
        if (s) per[v] = *s;
        else missing(v);
      }
    }
    return select_expression_columns(per);
  }

  // Identity-grouped split of `videos` into inner folds (sorted members).
  std::vector<std::vector<std::size_t>> inner_split(const std::vector<std::size_t>& videos, std::uint64_t tag) const {
    const auto ids = identity_ids(videos);
    std::set<std::string> unique(ids.begin(), ids.end());
    const int k = std::min<int>(config_.inner_folds, static_cast<int>(unique.size()));
    if (k < 2) throw DataError("fold " + std::to_string(fold_) + ": too few training identities for inner folds");
    const auto plan = grouped_kfold(ids, k, seed_for(tag));
    const auto assign = plan.assignments();
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < videos.size(); ++i) out[static_cast<std::size_t>(assign.at(ids[i]))].push_back(videos[i]);
    return out;
  }

  ClassifierSpec seeded(std::size_t c, std::size_t m, std::uint64_t salt) const {
    ClassifierSpec s = specs_[c];
    s.hyper.seed = derive_seed(s.hyper.seed ^ seed_for(1000 + salt), c * kModalityCount + m);
    return s;
  }

  // Trains on `fit_on` and scores `score_on` for modality m; records the fit.
  std::vector<double> fit_and_score(std::size_t c, std::size_t m, const std::vector<std::size_t>& fit_on,
                                    const std::vector<std::size_t>& score_on, const std::string& object,
                                    std::uint64_t salt) {
    std::vector<int> y;
    for (auto v : fit_on) y.push_back(labels_[v]);
    const auto groups = identity_ids(fit_on);
    const auto model = train(seeded(c, m, salt), x_[m].select_rows(fit_on), y, groups);
    out_.audit.record(fold_, object, video_ids(fit_on));
    std::vector<double> s;
    for (auto v : score_on) s.push_back(model.predict_score(x_[m].row(v)));
    return s;
  }

  static bool two_classes(const std::vector<std::size_t>& videos, const std::vector<int>& labels) {
    bool pos = false, neg = false;
    for (auto v : videos) (labels[v] == 1 ? pos : neg) = true;
    return pos && neg;
  }

  void run_classifier(std::size_t c) {
    const std::string kind(to_string(specs_[c].kind));
    for (std::size_t m = 0; m < kModalityCount; ++m) {
      if (!enabled_[m]) continue;
      const auto s = fit_and_score(c, m, train_, out_.test,
                                   "classifier:" + kind + ":" + std::string(to_string(static_cast<Modality>(m))), 0);
      for (std::size_t t = 0; t < s.size(); ++t) out_.modality_scores[t][c][m] = s[t];
    }

    bool any_fusion = false;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const auto& mask = rows_[r].modalities;
      const auto n_on = std::count(mask.begin(), mask.end(), true);
      if (n_on == 1) {
        const auto m = static_cast<std::size_t>(std::find(mask.begin(), mask.end(), true) - mask.begin());
        for (std::size_t t = 0; t < out_.test.size(); ++t) out_.row_scores[t][c][r] = out_.modality_scores[t][c][m];
      } else {
        any_fusion = true;
      }
    }
    if (!any_fusion) return;

    // Inner cross-validated scores on the training identities drive the weight search.
    const auto inner = inner_split(train_, 600 + c);
    std::vector<std::size_t> covered;
    std::vector<ModalityScores> inner_scores;
    for (std::size_t g = 0; g < inner.size(); ++g) {
      std::vector<std::size_t> fit_on;
      for (std::size_t h = 0; h < inner.size(); ++h) {
        if (h != g) fit_on.insert(fit_on.end(), inner[h].begin(), inner[h].end());
      }
      std::sort(fit_on.begin(), fit_on.end());
      if (!two_classes(fit_on, labels_)) continue;
      std::vector<ModalityScores> block(inner[g].size(), ModalityScores{});
      for (std::size_t m = 0; m < kModalityCount; ++m) {
        if (!enabled_[m]) continue;
        const auto s = fit_and_score(c, m, fit_on, inner[g],
                                     "classifier:" + kind + ":" + std::string(to_string(static_cast<Modality>(m))) +
                                         ":inner" + std::to_string(g),
                                     1 + g);
        for (std::size_t t = 0; t < s.size(); ++t) block[t][m] = s[t];
      }
      covered.insert(covered.end(), inner[g].begin(), inner[g].end());
      inner_scores.insert(inner_scores.end(), block.begin(), block.end());
    }
    const auto standardizer = ScoreStandardizer::fit(inner_scores);
    std::vector<ModalityScores> z;
    std::vector<int> y;
    for (std::size_t i = 0; i < covered.size(); ++i) {
      z.push_back(standardizer.apply(inner_scores[i]));
      y.push_back(labels_[covered[i]]);
    }
    const bool searchable = two_classes(covered, labels_);

    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const auto& mask = rows_[r].modalities;
      if (std::count(mask.begin(), mask.end(), true) < 2) continue;
      FusionRecord rec{fold_, r, c, {}, 0.0};
      if (searchable) {
        const auto res = search_weights_detailed(z, y, config_.fusion_step, mask);
        rec.weights = res.weights;
        rec.inner_auc = res.auc;
      } else {
        const double n_on = static_cast<double>(std::count(mask.begin(), mask.end(), true));
        for (std::size_t m = 0; m < kModalityCount; ++m) rec.weights.alpha[m] = mask[m] ? 1.0 / n_on : 0.0;
        out_.warnings.push_back("fold " + std::to_string(fold_) + ": inner scores single-class; uniform fusion weights");
      }
      out_.audit.record(fold_, "fusion:" + kind + ":" + rows_[r].name, video_ids(covered));
      for (std::size_t t = 0; t < out_.test.size(); ++t) {
        out_.row_scores[t][c][r] = fuse(standardizer.apply(out_.modality_scores[t][c]), rec.weights);
      }
      out_.fusion.push_back(rec);
    }
  }

 public:
  std::vector<std::optional<ExpressionScoreVector>> expression_for_test_;

 private:
  const DatasetManifest& manifest_;
  std::span<const VideoFeatures> features_;
  const ExperimentConfig& config_;
  const FoldPlan& plan_;
  const std::vector<ClassifierSpec>& specs_;
  const std::vector<FeatureRow>& rows_;
  std::vector<int> labels_;

  int fold_ = 0;
  FoldOutput out_;
  std::vector<std::size_t> train_;
  ModalityMask enabled_{};
  std::vector<Matrix> x_;
  std::optional<GaussianMixture> motion_gmm_;
  std::map<std::size_t, VideoClips> clips_;
};

std::optional<double> safe_auc(const std::vector<double>& s, const std::vector<int>& y) {
  const auto pos = std::count(y.begin(), y.end(), 1);
  if (pos == 0 || pos == static_cast<long>(y.size())) return std::nullopt;
  return auc_pr(s, y);
}

}  // namespace

ExperimentReport run_experiment(const DatasetManifest& manifest, std::span<const VideoFeatures> features,
                                const ExperimentConfig& config, const FoldPlan* plan_in) {
  config.validate();
  if (features.size() != manifest.size()) throw DimensionError("run_experiment: feature list does not match manifest");
  const FoldPlan plan = plan_in ? *plan_in : grouped_kfold(manifest, config.folds, config.seed);
  plan.check_against(manifest);

  ExperimentReport report;
  report.rows = active_rows(config);
  report.classifiers = effective_specs(config);
  report.aggregation = config.aggregation;
  report.plan = plan;
  report.seed = config.seed;
  report.config_json = experiment_config_to_json(config);
  report.config_hash = sha256_hex(report.config_json);

  const std::size_t k = plan.folds.size();
  std::vector<FoldOutput> outputs(k);
  std::vector<std::vector<std::optional<ExpressionScoreVector>>> expr(k);
  std::vector<std::exception_ptr> errors(k);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t f = next++; f < k; f = next++) {
      try {
        FoldRunner runner(manifest, features, config, plan, report.classifiers, report.rows);
        outputs[f] = runner.run(static_cast<int>(f));
        expr[f] = std::move(runner.expression_for_test_);
      } catch (...) {
        errors[f] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(config.workers), k);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  // Merge in fold order.
  const std::size_t nc = report.classifiers.size(), nr = report.rows.size();
  report.videos.resize(manifest.size());
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    report.videos[i].video_id = manifest[i].video_id;
    report.videos[i].identity_id = manifest[i].identity_id;
    report.videos[i].label = manifest[i].label;
  }
  std::array<std::vector<double>, kExpressionCount> clip_s;
  std::array<std::vector<int>, kExpressionCount> clip_y;
  for (std::size_t f = 0; f < k; ++f) {
    auto& o = outputs[f];
    report.audit.merge(o.audit);
    report.folds.push_back(o.diag);
    report.fusion.insert(report.fusion.end(), o.fusion.begin(), o.fusion.end());
    report.warnings.insert(report.warnings.end(), o.warnings.begin(), o.warnings.end());
    for (std::size_t e = 0; e < kExpressionCount; ++e) {
      clip_s[e].insert(clip_s[e].end(), o.clip_scores[e].begin(), o.clip_scores[e].end());
      clip_y[e].insert(clip_y[e].end(), o.clip_labels[e].begin(), o.clip_labels[e].end());
    }
    for (std::size_t t = 0; t < o.test.size(); ++t) {
      auto& v = report.videos[o.test[t]];
      if (v.fold >= 0) throw DataError("fold plan: video " + v.video_id + " is tested in more than one fold");
      v.fold = static_cast<int>(f);
      v.modality_scores = o.modality_scores[t];
      v.row_scores = o.row_scores[t];
      if (t < expr[f].size()) v.expression_vector = expr[f][t];
    }
  }
  report.audit.verify();

  double det_sum = 0.0;
  int det_n = 0;
  for (std::size_t e = 0; e < kExpressionCount; ++e) {
    report.detector_auc[e] = safe_auc(clip_s[e], clip_y[e]);
    if (report.detector_auc[e]) {
      det_sum += *report.detector_auc[e];
      ++det_n;
    }
  }
  if (det_n > 0) report.mean_detector_auc = det_sum / det_n;

  report.grid.assign(nr, std::vector<CellResult>(nc));
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t c = 0; c < nc; ++c) {
      auto& cell = report.grid[r][c];
      std::vector<double> s;
      std::vector<int> y;
      std::vector<std::vector<double>> fs(k);
      std::vector<std::vector<int>> fy(k);
      for (const auto& v : report.videos) {
        if (v.fold < 0) continue;
        s.push_back(v.row_scores[c][r]);
        y.push_back(v.label);
        fs[static_cast<std::size_t>(v.fold)].push_back(v.row_scores[c][r]);
        fy[static_cast<std::size_t>(v.fold)].push_back(v.label);
      }
      const auto pooled_auc = safe_auc(s, y);
      if (!pooled_auc) throw DataError("out-of-fold labels hold a single class");
      cell.pooled_auc = *pooled_auc;
      double sum = 0.0;
      int n = 0;
      for (std::size_t f = 0; f < k; ++f) {
        cell.fold_auc.push_back(safe_auc(fs[f], fy[f]));
        if (cell.fold_auc.back()) {
          sum += *cell.fold_auc.back();
          ++n;
        }
      }
      if (n > 0) cell.mean_fold_auc = sum / n;
    }
  }
  return report;
}

}  // namespace veritas
