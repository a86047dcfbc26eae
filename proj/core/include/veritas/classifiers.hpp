#pragma once

// Uniform train / score interface over the seven learners in models.hpp.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "veritas/matrix.hpp"
#include "veritas/models.hpp"

namespace veritas {

enum class ClassifierKind {
  kLinearSvm,
  kKernelSvm,
  kNaiveBayes,
  kDecisionTree,
  kRandomForest,
  kLogisticRegression,
  kAdaBoost,
};

inline constexpr std::array<ClassifierKind, 7> kAllClassifierKinds = {
    ClassifierKind::kLinearSvm,    ClassifierKind::kKernelSvm,          ClassifierKind::kNaiveBayes,
    ClassifierKind::kDecisionTree, ClassifierKind::kRandomForest,       ClassifierKind::kLogisticRegression,
    ClassifierKind::kAdaBoost,
};

std::string_view to_string(ClassifierKind kind);
// Accepts the names produced by to_string; throws ConfigError otherwise.
ClassifierKind parse_classifier_kind(std::string_view name);

struct Hyperparameters {
  double c = 1.0;
  // When non-empty, C for the SVMs is chosen from this grid by inner 3-fold
  // CV on the training rows (identity-grouped when groups are supplied).
  std::vector<double> c_grid;
  int degree = 3;
  int max_depth = 0;
  int min_samples_split = 2;
  int tree_count = 50;
  int max_features = 0;
  int boosting_rounds = 100;
  int weak_learner_depth = 2;
  double l2 = 1e-2;
  std::uint64_t seed = 0;

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::kLinearSvm;
  Hyperparameters hyper;

  void validate() const;
  friend bool operator==(const ClassifierSpec&, const ClassifierSpec&) = default;
};

std::string spec_to_json(const ClassifierSpec& spec);
ClassifierSpec spec_from_json(std::string_view text);

class TrainedModel {
 public:
  using Payload =
      std::variant<LinearSvm, KernelSvm, GaussianNaiveBayes, DecisionTree, RandomForest, LogisticRegression, AdaBoost>;

  TrainedModel(ClassifierKind kind, std::size_t input_dim, Payload payload, std::optional<Standardizer> scaler,
               double selected_c);

  ClassifierKind kind() const { return kind_; }
  std::size_t input_dim() const { return input_dim_; }
  const Payload& payload() const { return payload_; }
  const std::optional<Standardizer>& scaler() const { return scaler_; }
  // C actually used (after grid selection); 0 for kinds without C.
  double selected_c() const { return selected_c_; }
  // Columns retained after zero-variance removal (naive Bayes only; empty otherwise).
  std::vector<std::size_t> feature_mask() const;

  // Higher means more likely positive. SVMs: margin. Naive Bayes: log-odds.
  // Logistic regression: probability. Forest: positive vote fraction.
  // AdaBoost: signed weighted vote.
  double predict_score(std::span<const double> x) const;
  std::vector<double> predict_scores(const Matrix& x) const;

 private:
  ClassifierKind kind_;
  std::size_t input_dim_;
  Payload payload_;
  std::optional<Standardizer> scaler_;
  double selected_c_;
};

// Throws DegenerateDataError on single-class labels or N < 2, DataError on
// non-finite features.
TrainedModel train(const ClassifierSpec& spec, const Matrix& x, std::span<const int> y,
                   std::span<const std::string> groups = {});

std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(std::string_view text);

}  // namespace veritas
