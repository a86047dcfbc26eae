#include <algorithm>
#include <cmath>
#include <map>

#include "json.hpp"
#include "veritas/classifiers.hpp"
#include "veritas/error.hpp"
#include "veritas/metrics.hpp"
#include "veritas/random.hpp"

namespace veritas {

using nlohmann::json;

Standardizer Standardizer::fit(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  if (n == 0) return s;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += x(i, j);
  }
  for (auto& m : s.mean) m /= static_cast<double>(n);
  std::vector<double> var(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dx = x(i, j) - s.mean[j];
      var[j] += dx * dx;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(n));
    if (sd > 0.0) s.scale[j] = sd;
  }
  return s;
}

void Standardizer::apply_into(std::span<const double> x, std::span<double> out) const {
  for (std::size_t j = 0; j < mean.size(); ++j) out[j] = (x[j] - mean[j]) / scale[j];
}

Matrix Standardizer::apply(const Matrix& x) const {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) apply_into(x.row(i), out.row(i));
  return out;
}

namespace {

constexpr std::array<std::string_view, 7> kKindNames = {
    "linear-svm", "kernel-svm", "naive-bayes", "decision-tree", "random-forest", "logistic-regression", "adaboost",
};

bool uses_scaler(ClassifierKind k) {
  return k == ClassifierKind::kLinearSvm || k == ClassifierKind::kKernelSvm ||
         k == ClassifierKind::kLogisticRegression;
}

bool uses_c(ClassifierKind k) { return k == ClassifierKind::kLinearSvm || k == ClassifierKind::kKernelSvm; }

TrainedModel::Payload fit_payload(const ClassifierSpec& spec, double c, const Matrix& x, std::span<const int> y) {
  const auto& h = spec.hyper;
  switch (spec.kind) {
    case ClassifierKind::kLinearSvm: {
      LinearSvmOptions o;
      o.c = c;
      o.seed = h.seed;
      return train_linear_svm(x, y, o);
    }
    case ClassifierKind::kKernelSvm: {
      KernelSvmOptions o;
      o.c = c;
      o.degree = h.degree;
      return train_kernel_svm(x, y, o).model;
    }
    case ClassifierKind::kNaiveBayes:
      return train_naive_bayes(x, y);
    case ClassifierKind::kDecisionTree: {
      TreeOptions o;
      o.max_depth = h.max_depth;
      o.min_samples_split = h.min_samples_split;
      o.seed = h.seed;
      const std::vector<double> w(x.rows(), 1.0);
      return grow_tree(x, y, w, o);
    }
    case ClassifierKind::kRandomForest: {
      RandomForestOptions o;
      o.tree_count = h.tree_count;
      o.max_features = h.max_features;
      o.max_depth = h.max_depth;
      o.min_samples_split = h.min_samples_split;
      o.seed = h.seed;
      return train_random_forest(x, y, o);
    }
    case ClassifierKind::kLogisticRegression: {
      LogisticRegressionOptions o;
      o.l2 = h.l2;
      return train_logistic_regression(x, y, o);
    }
    case ClassifierKind::kAdaBoost: {
      AdaBoostOptions o;
      o.rounds = h.boosting_rounds;
      o.weak_learner_depth = h.weak_learner_depth;
      return train_adaboost(x, y, o);
    }
  }
  throw ConfigError("unknown classifier kind");
}

double payload_score(const TrainedModel::Payload& p, std::span<const double> x) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearSvm> || std::is_same_v<T, KernelSvm>) {
          return m.decision(x);
        } else if constexpr (std::is_same_v<T, GaussianNaiveBayes>) {
          return m.log_odds(x);
        } else if constexpr (std::is_same_v<T, DecisionTree>) {
          return m.predict(x);
        } else if constexpr (std::is_same_v<T, LogisticRegression>) {
          return m.probability(x);
        } else {
          return m.score(x);
        }
      },
      p);
}

bool both_classes(std::span<const int> y) {
  bool pos = false, neg = false;
  for (int v : y) (v == 1 ? pos : neg) = true;
  return pos && neg;
}

// Inner 3-fold assignment; grouped when groups are supplied.
std::vector<int> inner_folds(std::size_t n, std::span<const std::string> groups, std::uint64_t seed) {
  constexpr int kFolds = 3;
  std::vector<int> fold(n);
  Rng rng(derive_seed(seed, 0xC9));
  if (groups.empty()) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t i = 0; i < n; ++i) fold[order[i]] = static_cast<int>(i % kFolds);
    return fold;
  }
  std::map<std::string, int> gid;
  for (const auto& g : groups) gid.emplace(g, 0);
  std::vector<std::string> names;
  for (const auto& [g, _] : gid) names.push_back(g);
  rng.shuffle(names);
  for (std::size_t i = 0; i < names.size(); ++i) gid[names[i]] = static_cast<int>(i % kFolds);
  for (std::size_t i = 0; i < n; ++i) fold[i] = gid[groups[i]];
  return fold;
}

double select_c(const ClassifierSpec& spec, const Matrix& xs, std::span<const int> y,
                std::span<const std::string> groups) {
  const auto& grid = spec.hyper.c_grid;
  if (grid.size() <= 1) return grid.empty() ? spec.hyper.c : grid.front();
  const std::size_t n = xs.rows();
  const auto fold = inner_folds(n, groups, spec.hyper.seed);
  double best_auc = -1.0;
  double best_c = grid.front();
  for (double c : grid) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (int f = 0; f < 3; ++f) {
      std::vector<std::size_t> tr, te;
      for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? te : tr).push_back(i);
      if (te.empty()) continue;
      std::vector<int> ytr;
      for (auto i : tr) ytr.push_back(y[i]);
      if (!both_classes(ytr)) continue;
      // Rescale inside the inner split so validation rows stay unseen.
      const Matrix xtr_raw = xs.select_rows(tr);
      const Standardizer sc = Standardizer::fit(xtr_raw);
      const auto model = fit_payload(spec, c, sc.apply(xtr_raw), ytr);
      std::vector<double> buf(xs.cols());
      for (auto i : te) {
        sc.apply_into(xs.row(i), buf);
        scores.push_back(payload_score(model, buf));
        labels.push_back(y[i]);
      }
    }
    if (!both_classes(labels)) continue;
    const double a = auc_pr(scores, labels);
    if (a > best_auc) {
      best_auc = a;
      best_c = c;
    }
  }
  return best_auc < 0.0 ? spec.hyper.c : best_c;
}

// --- JSON codecs -----------------------------------------------------------

json tree_to_json(const DecisionTree& t) {
  json nodes = json::array();
  for (const auto& nd : t.nodes) nodes.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.value});
  return nodes;
}

DecisionTree tree_from_json(const json& j) {
  DecisionTree t;
  for (const auto& nd : j) {
    t.nodes.push_back(TreeNode{nd.at(0).get<int>(), nd.at(1).get<double>(), nd.at(2).get<int>(),
                               nd.at(3).get<int>(), nd.at(4).get<double>()});
  }
  for (const auto& nd : t.nodes) {
    const auto sz = static_cast<int>(t.nodes.size());
    if (nd.feature >= 0 && (nd.left <= 0 || nd.right <= 0 || nd.left >= sz || nd.right >= sz)) {
      throw DataError("model json: bad tree node link");
    }
  }
  if (t.nodes.empty()) throw DataError("model json: empty tree");
  return t;
}

json payload_to_json(const TrainedModel::Payload& p) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearSvm>) {
          return {{"weights", m.weights}, {"bias", m.bias}};
        } else if constexpr (std::is_same_v<T, KernelSvm>) {
          return {{"degree", m.degree},
                  {"gamma", m.gamma},
                  {"dim", m.support_vectors.cols()},
                  {"support_vectors", m.support_vectors.data()},
                  {"coef", m.coef},
                  {"bias", m.bias}};
        } else if constexpr (std::is_same_v<T, GaussianNaiveBayes>) {
          return {{"mask", m.mask},
                  {"mean", {m.mean[0], m.mean[1]}},
                  {"var", {m.var[0], m.var[1]}},
                  {"log_prior", {m.log_prior[0], m.log_prior[1]}}};
        } else if constexpr (std::is_same_v<T, DecisionTree>) {
          return {{"nodes", tree_to_json(m)}};
        } else if constexpr (std::is_same_v<T, RandomForest>) {
          json trees = json::array();
          for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
          return {{"trees", trees}};
        } else if constexpr (std::is_same_v<T, LogisticRegression>) {
          return {{"weights", m.weights}, {"bias", m.bias}};
        } else {
          json trees = json::array();
          for (const auto& t : m.learners) trees.push_back(tree_to_json(t));
          return {{"learners", trees}, {"alphas", m.alphas}};
        }
      },
      p);
}

TrainedModel::Payload payload_from_json(ClassifierKind kind, const json& j) {
  switch (kind) {
    case ClassifierKind::kLinearSvm:
      return LinearSvm{j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>()};
    case ClassifierKind::kKernelSvm: {
      KernelSvm m;
      m.degree = j.at("degree").get<int>();
      m.gamma = j.at("gamma").get<double>();
      const auto dim = j.at("dim").get<std::size_t>();
      auto sv = j.at("support_vectors").get<std::vector<double>>();
      m.coef = j.at("coef").get<std::vector<double>>();
      if (sv.size() != m.coef.size() * dim) throw DataError("model json: support vector size mismatch");
      m.support_vectors = Matrix(m.coef.size(), dim, std::move(sv));
      m.bias = j.at("bias").get<double>();
      return m;
    }
    case ClassifierKind::kNaiveBayes: {
      GaussianNaiveBayes m;
      m.mask = j.at("mask").get<std::vector<std::size_t>>();
      for (int c = 0; c < 2; ++c) {
        m.mean[c] = j.at("mean").at(c).get<std::vector<double>>();
        m.var[c] = j.at("var").at(c).get<std::vector<double>>();
        m.log_prior[c] = j.at("log_prior").at(c).get<double>();
        if (m.mean[c].size() != m.mask.size() || m.var[c].size() != m.mask.size()) {
          throw DataError("model json: naive bayes size mismatch");
        }
      }
      return m;
    }
    case ClassifierKind::kDecisionTree:
      return tree_from_json(j.at("nodes"));
    case ClassifierKind::kRandomForest: {
      RandomForest m;
      for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
      if (m.trees.empty()) throw DataError("model json: empty forest");
      return m;
    }
    case ClassifierKind::kLogisticRegression:
      return LogisticRegression{j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>()};
    case ClassifierKind::kAdaBoost: {
      AdaBoost m;
      for (const auto& t : j.at("learners")) m.learners.push_back(tree_from_json(t));
      m.alphas = j.at("alphas").get<std::vector<double>>();
      if (m.alphas.size() != m.learners.size()) throw DataError("model json: adaboost size mismatch");
      return m;
    }
  }
  throw DataError("model json: unknown kind");
}

json hyper_to_json(const Hyperparameters& h) {
  return {{"c", h.c},
          {"c_grid", h.c_grid},
          {"degree", h.degree},
          {"max_depth", h.max_depth},
          {"min_samples_split", h.min_samples_split},
          {"tree_count", h.tree_count},
          {"max_features", h.max_features},
          {"boosting_rounds", h.boosting_rounds},
          {"weak_learner_depth", h.weak_learner_depth},
          {"l2", h.l2},
          {"seed", h.seed}};
}

Hyperparameters hyper_from_json(const json& j) {
  Hyperparameters h;
  h.c = j.value("c", h.c);
  h.c_grid = j.value("c_grid", h.c_grid);
  h.degree = j.value("degree", h.degree);
  h.max_depth = j.value("max_depth", h.max_depth);
  h.min_samples_split = j.value("min_samples_split", h.min_samples_split);
  h.tree_count = j.value("tree_count", h.tree_count);
  h.max_features = j.value("max_features", h.max_features);
  h.boosting_rounds = j.value("boosting_rounds", h.boosting_rounds);
  h.weak_learner_depth = j.value("weak_learner_depth", h.weak_learner_depth);
  h.l2 = j.value("l2", h.l2);
  h.seed = j.value("seed", h.seed);
  return h;
}

}  // namespace

std::string_view to_string(ClassifierKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

ClassifierKind parse_classifier_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<ClassifierKind>(i);
  }
  throw ConfigError("unknown classifier kind '" + std::string(name) + "'");
}

void ClassifierSpec::validate() const {
  const auto& h = hyper;
  if (!(h.c > 0.0)) throw ConfigError("classifier: C must be positive");
  for (double c : h.c_grid) {
    if (!(c > 0.0)) throw ConfigError("classifier: C grid values must be positive");
  }
  if (h.degree < 1) throw ConfigError("classifier: degree must be >= 1");
  if (h.max_depth < 0) throw ConfigError("classifier: max_depth must be >= 0");
  if (h.min_samples_split < 2) throw ConfigError("classifier: min_samples_split must be >= 2");
  if (h.tree_count < 1) throw ConfigError("classifier: tree_count must be >= 1");
  if (h.max_features < 0) throw ConfigError("classifier: max_features must be >= 0");
  if (h.boosting_rounds < 1) throw ConfigError("classifier: boosting_rounds must be >= 1");
  if (h.weak_learner_depth < 1) throw ConfigError("classifier: weak_learner_depth must be >= 1");
  if (h.l2 < 0.0) throw ConfigError("classifier: l2 must be >= 0");
}

std::string spec_to_json(const ClassifierSpec& spec) {
  return json{{"kind", to_string(spec.kind)}, {"hyperparameters", hyper_to_json(spec.hyper)}}.dump();
}

ClassifierSpec spec_from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    ClassifierSpec s;
    s.kind = parse_classifier_kind(j.at("kind").get<std::string>());
    if (j.contains("hyperparameters")) s.hyper = hyper_from_json(j.at("hyperparameters"));
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("classifier spec json: ") + e.what());
  }
}

TrainedModel::TrainedModel(ClassifierKind kind, std::size_t input_dim, Payload payload,
                           std::optional<Standardizer> scaler, double selected_c)
    : kind_(kind),
      input_dim_(input_dim),
      payload_(std::move(payload)),
      scaler_(std::move(scaler)),
      selected_c_(selected_c) {
  if (payload_.index() != static_cast<std::size_t>(kind_)) throw ConfigError("model payload does not match kind");
  if (scaler_ && scaler_->mean.size() != input_dim_) throw DimensionError("model scaler dimension mismatch");
}

std::vector<std::size_t> TrainedModel::feature_mask() const {
  if (const auto* nb = std::get_if<GaussianNaiveBayes>(&payload_)) return nb->mask;
  return {};
}

double TrainedModel::predict_score(std::span<const double> x) const {
  if (x.size() != input_dim_) {
    throw DimensionError("predict_score: expected dimension " + std::to_string(input_dim_) + ", got " +
                         std::to_string(x.size()));
  }
  if (!scaler_) return payload_score(payload_, x);
  std::vector<double> buf(x.size());
  scaler_->apply_into(x, buf);
  return payload_score(payload_, buf);
}

std::vector<double> TrainedModel::predict_scores(const Matrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_score(x.row(i));
  return out;
}

TrainedModel train(const ClassifierSpec& spec, const Matrix& x, std::span<const int> y,
                   std::span<const std::string> groups) {
  spec.validate();
  if (y.size() != x.rows()) throw DimensionError("train: label count != row count");
  if (!groups.empty() && groups.size() != x.rows()) throw DimensionError("train: group count != row count");
  if (x.rows() < 2) throw DegenerateDataError("train: need at least two rows");
  if (x.cols() == 0) throw DimensionError("train: zero feature columns");
  for (int v : y) {
    if (v != 0 && v != 1) throw DataError("train: labels must be 0 or 1");
  }
  if (!both_classes(y)) throw DegenerateDataError("train: single-class labels");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw DataError("train: non-finite feature value");
  }

  double c = 0.0;
  if (uses_c(spec.kind)) c = select_c(spec, x, y, groups);
  if (!uses_scaler(spec.kind)) return TrainedModel(spec.kind, x.cols(), fit_payload(spec, c, x, y), std::nullopt, c);
  Standardizer sc = Standardizer::fit(x);
  auto payload = fit_payload(spec, c, sc.apply(x), y);
  return TrainedModel(spec.kind, x.cols(), std::move(payload), std::move(sc), c);
}

std::string model_to_json(const TrainedModel& model) {
  json j = {{"format", "veritas-model"},
            {"version", 1},
            {"kind", to_string(model.kind())},
            {"input_dim", model.input_dim()},
            {"selected_c", model.selected_c()},
            {"payload", payload_to_json(model.payload())}};
  if (model.scaler()) j["scaler"] = {{"mean", model.scaler()->mean}, {"scale", model.scaler()->scale}};
  return j.dump();
}

TrainedModel model_from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    if (j.at("format").get<std::string>() != "veritas-model") throw DataError("model json: wrong format tag");
    if (j.at("version").get<int>() != 1) throw DataError("model json: unsupported version");
    ClassifierKind kind;
    try {
      kind = parse_classifier_kind(j.at("kind").get<std::string>());
    } catch (const ConfigError& e) {
      throw DataError(std::string("model json: ") + e.what());
    }
    std::optional<Standardizer> sc;
    if (j.contains("scaler")) {
      sc = Standardizer{j["scaler"].at("mean").get<std::vector<double>>(),
                        j["scaler"].at("scale").get<std::vector<double>>()};
    }
    return TrainedModel(kind, j.at("input_dim").get<std::size_t>(), payload_from_json(kind, j.at("payload")),
                        std::move(sc), j.value("selected_c", 0.0));
  } catch (const json::exception& e) {
    throw DataError(std::string("model json: ") + e.what());
  }
}

}  // namespace veritas
