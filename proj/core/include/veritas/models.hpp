#pragma once

// Concrete learners behind the uniform classifier interface. Each model is a
// plain value type; training functions take row-major features and labels
// in {0, 1}.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "veritas/matrix.hpp"

namespace veritas {

/// Per-column affine map to zero mean / unit variance, fit on training rows.
/// Zero-variance columns are centred but left unscaled.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
  void apply_into(std::span<const double> x, std::span<double> out) const;
};

// ---------------------------------------------------------------------------
// Linear SVM: L2-regularized hinge loss solved by dual coordinate descent.
// The bias is learned as the weight of an appended constant-1 feature and is
// regularized with the other weights, so the primal objective is
//   0.5 * (|w|^2 + b^2) + C * sum_i max(0, 1 - y_i (w.x_i + b)).

struct LinearSvmOptions {
  double c = 1.0;
  // Stop when the spread of projected gradients falls below this.
  double tolerance = 1e-5;
  int max_epochs = 20000;
  std::uint64_t seed = 0;
};

struct LinearSvm {
  std::vector<double> weights;
  double bias = 0.0;

  double decision(std::span<const double> x) const { return dot(weights, x) + bias; }
};

LinearSvm train_linear_svm(const Matrix& x, std::span<const int> y, const LinearSvmOptions& options = {});
double linear_svm_objective(const LinearSvm& model, const Matrix& x, std::span<const int> y, double c);

// ---------------------------------------------------------------------------
// Kernel SVM with polynomial kernel k(a, b) = (a.b / D + 1)^degree, trained
// by SMO with second-order working-set selection.

struct KernelSvmOptions {
  double c = 1.0;
  int degree = 3;
  double tolerance = 1e-3;
  long max_iterations = 10'000'000;
};

struct KernelSvm {
  int degree = 3;
  double gamma = 1.0;  // 1 / D
  Matrix support_vectors;
  std::vector<double> coef;  // alpha_i * y_i
  double bias = 0.0;

  double kernel(std::span<const double> a, std::span<const double> b) const;
  double decision(std::span<const double> x) const;
};

struct KernelSvmSolution {
  KernelSvm model;
  std::vector<double> alpha;  // one per training row
  long iterations = 0;
};

KernelSvmSolution train_kernel_svm(const Matrix& x, std::span<const int> y, const KernelSvmOptions& options = {});

// ---------------------------------------------------------------------------
// Gaussian naive Bayes. Columns with zero variance over the training set
// are removed before fitting; `mask` lists the retained columns.

struct GaussianNaiveBayes {
  std::vector<std::size_t> mask;
  std::vector<double> mean[2];
  std::vector<double> var[2];
  double log_prior[2] = {0.0, 0.0};

  // log P(y=1|x) - log P(y=0|x)
  double log_odds(std::span<const double> x) const;
};

GaussianNaiveBayes train_naive_bayes(const Matrix& x, std::span<const int> y);

// ---------------------------------------------------------------------------
// CART with Gini impurity.

struct TreeOptions {
  int max_depth = 0;  // 0: unlimited
  int min_samples_split = 2;
  int max_features = 0;  // features examined per node; 0: all
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // weighted fraction of positives reaching the node
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  // Positive fraction of the leaf reached by x (x[f] <= threshold goes left).
  double predict(std::span<const double> x) const;
  bool predict_positive(std::span<const double> x) const { return predict(x) > 0.5; }
  int depth() const;
};

// Column-wise row orderings, shared by every tree grown on the same matrix.
struct PresortedColumns {
  explicit PresortedColumns(const Matrix& x);
  std::vector<std::vector<std::uint32_t>> order;
};

// Rows with zero weight are excluded. `presorted` may be null.
DecisionTree grow_tree(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                       const TreeOptions& options, const PresortedColumns* presorted = nullptr);

// ---------------------------------------------------------------------------

struct RandomForestOptions {
  int tree_count = 50;
  int max_features = 0;  // 0: floor(sqrt(D)), at least 1
  int max_depth = 0;
  int min_samples_split = 2;
  std::uint64_t seed = 0;
};

struct RandomForest {
  std::vector<DecisionTree> trees;

  // Fraction of trees voting positive: a multiple of 1 / tree_count.
  double score(std::span<const double> x) const;
};

RandomForest train_random_forest(const Matrix& x, std::span<const int> y, const RandomForestOptions& options = {});

// ---------------------------------------------------------------------------
// Binomial logistic regression, L2 penalty on the weights (not the bias),
// fit by L-BFGS on the mean log-loss.

struct LogisticRegressionOptions {
  double l2 = 1e-2;
  int max_iterations = 500;
  double tolerance = 1e-7;
};

struct LogisticRegression {
  std::vector<double> weights;
  double bias = 0.0;

  double probability(std::span<const double> x) const;
};

LogisticRegression train_logistic_regression(const Matrix& x, std::span<const int> y,
                                             const LogisticRegressionOptions& options = {});

// ---------------------------------------------------------------------------
// Discrete AdaBoost over shallow CART trees.

struct AdaBoostOptions {
  int rounds = 100;
  int weak_learner_depth = 2;
};

struct AdaBoost {
  std::vector<DecisionTree> learners;
  std::vector<double> alphas;

  // sum_t alpha_t h_t(x) with h_t in {-1, +1}
  double score(std::span<const double> x) const;
  double score_prefix(std::span<const double> x, std::size_t rounds) const;
};

AdaBoost train_adaboost(const Matrix& x, std::span<const int> y, const AdaBoostOptions& options = {});

// ---------------------------------------------------------------------------
// Platt scaling: p = 1 / (1 + exp(a * s + b)), fit on (score, label) pairs.

struct PlattScaling {
  double a = -1.0;
  double b = 0.0;
  double operator()(double score) const;
};

PlattScaling fit_platt(std::span<const double> scores, std::span<const int> y);

// Minimizes a smooth function with limited-memory BFGS and Armijo
// backtracking. `fg` returns f(x) and writes the gradient.
struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
};
LbfgsResult minimize_lbfgs(const std::function<double(std::span<const double>, std::span<double>)>& fg,
                           std::vector<double> x0, int max_iterations, double tolerance, int memory = 10);

}  // namespace veritas
