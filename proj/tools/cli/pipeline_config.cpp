#include "pipeline_config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "toml.hpp"
#include "veritas/error.hpp"
#include "veritas/microexpression.hpp"

namespace veritas::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const toml::table& t, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (auto&& [k, _] : t) {
    if (std::find(allowed.begin(), allowed.end(), k.str()) == allowed.end()) {
      throw ConfigError("config: unknown key '" + std::string(k.str()) + "' in " + where);
    }
  }
}

std::string qualified(const std::string& where, std::string_view key) {
  return where.empty() ? std::string(key) : where + "." + std::string(key);
}

template <class T>
std::optional<T> get(const toml::table& t, std::string_view key, const std::string& where) {
  const toml::node* n = t.get(key);
  if (!n) return std::nullopt;
  if constexpr (std::is_same_v<T, bool>) {
    if (!n->is_boolean()) throw ConfigError("config: " + qualified(where, key) + " must be a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!n->is_integer()) throw ConfigError("config: " + qualified(where, key) + " must be an integer");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!n->is_number()) throw ConfigError("config: " + qualified(where, key) + " must be a number");
  } else {
    if (!n->is_string()) throw ConfigError("config: " + qualified(where, key) + " must be a string");
  }
  auto v = n->value<T>();
  if (!v) throw ConfigError("config: " + qualified(where, key) + " is out of range");
  return v;
}

template <class T>
void read(const toml::table& t, std::string_view key, const std::string& where, T& out) {
  if (auto v = get<T>(t, key, where)) out = *v;
}

std::vector<std::string> string_list(const toml::table& t, std::string_view key, const std::string& where) {
  const toml::node* n = t.get(key);
  const auto* arr = n ? n->as_array() : nullptr;
  if (!arr) throw ConfigError("config: " + qualified(where, key) + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : *arr) {
    auto s = e.value<std::string>();
    if (!s || !e.is_string()) throw ConfigError("config: " + qualified(where, key) + " must be an array of strings");
    out.push_back(*s);
  }
  return out;
}

const toml::table* subtable(const toml::table& t, std::string_view key, const std::string& where) {
  const toml::node* n = t.get(key);
  if (!n) return nullptr;
  if (!n->is_table()) throw ConfigError("config: " + qualified(where, key) + " must be a table");
  return n->as_table();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void read_fv(const toml::table& t, const std::string& where, FvSettings& fv) {
  read(t, "components", where, fv.components);
  read(t, "max_gmm_samples", where, fv.max_gmm_samples);
  read(t, "normalize", where, fv.normalize);
  read(t, "power_alpha", where, fv.power_alpha);
}

void read_mfcc(const toml::table& t, MfccConfig& m) {
  const std::string where = "audio.mfcc";
  check_keys(t,
             {"frame_length", "hop", "filter_count", "coefficient_count", "fft_size", "low_freq", "high_freq",
              "log_floor", "pre_emphasis", "append_deltas"},
             where);
  read(t, "frame_length", where, m.frame_length);
  read(t, "hop", where, m.hop);
  read(t, "filter_count", where, m.filter_count);
  read(t, "coefficient_count", where, m.coefficient_count);
  read(t, "fft_size", where, m.fft_size);
  read(t, "low_freq", where, m.low_freq);
  if (auto v = get<double>(t, "high_freq", where)) m.high_freq = *v;
  read(t, "log_floor", where, m.log_floor);
  read(t, "pre_emphasis", where, m.pre_emphasis);
  read(t, "append_deltas", where, m.append_deltas);
}

ColumnRange column_range(const toml::table& t, const std::string& where) {
  const toml::node* n = t.get("columns");
  const auto* arr = n ? n->as_array() : nullptr;
  if (!arr || arr->size() != 2 || !(*arr)[0].is_integer() || !(*arr)[1].is_integer()) {
    throw ConfigError("config: " + where + ".columns must be [first, last]");
  }
  const auto a = *(*arr)[0].value<std::int64_t>(), b = *(*arr)[1].value<std::int64_t>();
  if (a < 0 || b < a) throw ConfigError("config: " + where + ".columns must satisfy 0 <= first <= last");
  return {static_cast<std::size_t>(a), static_cast<std::size_t>(b)};
}

// Hyperparameter table overlaid on a spec through its JSON form.
ClassifierSpec overlay_hyper(const ClassifierSpec& base, const toml::table& t, const std::string& where) {
  auto j = json::parse(spec_to_json(base));
  auto& h = j.at("hyperparameters");
  for (auto&& [k, v] : t) {
    const std::string key(k.str());
    if (!h.contains(key)) throw ConfigError("config: unknown key '" + key + "' in " + where);
    if (key == "c_grid") {
      std::vector<double> grid;
      const auto* arr = v.as_array();
      if (!arr) throw ConfigError("config: " + where + ".c_grid must be an array of numbers");
      for (const auto& e : *arr) {
        auto d = e.value<double>();
        if (!d) throw ConfigError("config: " + where + ".c_grid must be an array of numbers");
        grid.push_back(*d);
      }
      h[key] = grid;
    } else if (key == "c" || key == "l2") {
      auto d = v.value<double>();
      if (!d || !v.is_number()) throw ConfigError("config: " + where + "." + key + " must be a number");
      h[key] = *d;
    } else if (key == "seed") {
      auto d = v.value<std::int64_t>();
      if (!d || !v.is_integer() || *d < 0) throw ConfigError("config: " + where + ".seed must be a non-negative integer");
      h[key] = static_cast<std::uint64_t>(*d);
    } else {
      auto d = v.value<std::int64_t>();
      if (!d || !v.is_integer()) throw ConfigError("config: " + where + "." + key + " must be an integer");
      h[key] = *d;
    }
  }
  return spec_from_json(j.dump());
}

void select_classifiers(PipelineConfig& c, const std::vector<std::string>& names) {
  if (names.empty()) throw ConfigError("config: classifier list must not be empty");
  std::vector<ClassifierSpec> chosen;
  for (const auto& n : names) {
    const auto kind = parse_classifier_kind(n);
    for (const auto& s : c.classifier_pool) {
      if (s.kind != kind) continue;
      if (std::find(chosen.begin(), chosen.end(), s) != chosen.end()) {
        throw ConfigError("config: classifier '" + n + "' listed twice");
      }
      chosen.push_back(s);
    }
  }
  c.experiment.classifiers = std::move(chosen);
}

}  // namespace

ModalityMask parse_modality_list(const std::vector<std::string>& names) {
  ModalityMask m{};
  for (const auto& n : names) m[static_cast<std::size_t>(parse_modality(n))] = true;
  if (std::none_of(m.begin(), m.end(), [](bool b) { return b; })) {
    throw ConfigError("modality subset must be non-empty");
  }
  return m;
}

ExpressionBits parse_expression_list(const std::vector<std::string>& names) {
  ExpressionBits b;
  for (const auto& n : names) b.set(parse_expression(n));
  if (b.none()) throw ConfigError("expression subset must name at least one expression");
  return b;
}

ExpressionSource parse_expression_source(std::string_view name) {
  if (name == "predicted") return ExpressionSource::kPredicted;
  if (name == "ground-truth") return ExpressionSource::kGroundTruth;
  throw ConfigError("unknown expression source '" + std::string(name) + "' (predicted | ground-truth)");
}

AucAggregation parse_aggregation(std::string_view name) {
  if (name == "pooled") return AucAggregation::kPooled;
  if (name == "fold-mean") return AucAggregation::kFoldMean;
  throw ConfigError("unknown aggregation '" + std::string(name) + "' (pooled | fold-mean)");
}

PipelineConfig parse_pipeline_config(std::string_view text, const fs::path& base) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(msg.str());
  }
  check_keys(root,
             {"manifest", "output_dir", "cache_dir", "fold_plan", "workers", "motion", "audio", "transcript", "gmm",
              "expressions", "evaluation", "hyperparameters"},
             "the top level");

  PipelineConfig c;
  auto& x = c.experiment;
  const auto manifest = get<std::string>(root, "manifest", "");
  if (!manifest) throw ConfigError("config: 'manifest' is required");
  c.manifest = resolve(base, *manifest);
  c.output_dir = resolve(base, get<std::string>(root, "output_dir", "").value_or(c.output_dir.string()));
  if (auto v = get<std::string>(root, "cache_dir", "")) c.cache_dir = resolve(base, *v);
  if (auto v = get<std::string>(root, "fold_plan", "")) c.fold_plan = resolve(base, *v);
  read(root, "workers", "", c.workers);

  if (const auto* t = subtable(root, "motion", "")) {
    check_keys(*t, {"columns", "frame_column", "components", "max_gmm_samples", "normalize", "power_alpha"}, "motion");
    if (t->contains("columns")) c.extraction.motion_columns = column_range(*t, "motion");
    if (auto v = get<std::int64_t>(*t, "frame_column", "motion")) {
      c.extraction.frame_column = *v < 0 ? std::nullopt : std::optional<std::size_t>(static_cast<std::size_t>(*v));
    }
    read_fv(*t, "motion", x.motion_fv);
  }
  if (const auto* t = subtable(root, "audio", "")) {
    check_keys(*t, {"mfcc", "components", "max_gmm_samples", "normalize", "power_alpha"}, "audio");
    if (const auto* m = subtable(*t, "mfcc", "audio")) read_mfcc(*m, c.extraction.mfcc);
    read_fv(*t, "audio", x.audio_fv);
  }
  if (const auto* t = subtable(root, "transcript", "")) {
    check_keys(*t, {"embeddings", "embedding_limit", "components", "max_gmm_samples", "normalize", "power_alpha"},
               "transcript");
    if (auto v = get<std::string>(*t, "embeddings", "transcript")) c.extraction.embeddings_path = resolve(base, *v);
    if (auto v = get<std::int64_t>(*t, "embedding_limit", "transcript")) {
      if (*v < 1) throw ConfigError("config: transcript.embedding_limit must be >= 1");
      c.extraction.embedding_limit = static_cast<std::size_t>(*v);
    }
    read_fv(*t, "transcript", x.transcript_fv);
  }
  if (const auto* t = subtable(root, "gmm", "")) {
    check_keys(*t, {"max_iterations", "tolerance", "variance_floor_factor", "kmeans_iterations"}, "gmm");
    read(*t, "max_iterations", "gmm", x.em.max_iterations);
    read(*t, "tolerance", "gmm", x.em.tolerance);
    read(*t, "variance_floor_factor", "gmm", x.em.variance_floor_factor);
    read(*t, "kmeans_iterations", "gmm", x.em.kmeans_iterations);
  }
  if (const auto* t = subtable(root, "expressions", "")) {
    check_keys(*t, {"source", "fps", "clip_seconds", "subset", "calibrate", "detector_c", "broadcast_video_labels"},
               "expressions");
    if (auto v = get<std::string>(*t, "source", "expressions")) x.expressions = parse_expression_source(*v);
    read(*t, "fps", "expressions", x.fps);
    read(*t, "clip_seconds", "expressions", x.clip_seconds);
    if (t->contains("subset")) x.expression_subset = parse_expression_list(string_list(*t, "subset", "expressions"));
    read(*t, "calibrate", "expressions", x.calibrate_detectors);
    read(*t, "detector_c", "expressions", x.detector_c);
    read(*t, "broadcast_video_labels", "expressions", x.broadcast_video_labels);
  }
  if (const auto* t = subtable(root, "hyperparameters", "")) {
    for (auto&& [k, v] : *t) {
      const std::string name(k.str());
      const auto kind = parse_classifier_kind(name);
      if (!v.is_table()) throw ConfigError("config: hyperparameters." + name + " must be a table");
      for (auto& s : c.classifier_pool) {
        if (s.kind == kind) s = overlay_hyper(s, *v.as_table(), "hyperparameters." + name);
      }
    }
  }
  c.experiment.classifiers = c.classifier_pool;
  if (const auto* t = subtable(root, "evaluation", "")) {
    check_keys(*t, {"modalities", "classifiers", "folds", "seed", "inner_folds", "fusion_step", "aggregation"},
               "evaluation");
    if (t->contains("modalities")) x.modalities = parse_modality_list(string_list(*t, "modalities", "evaluation"));
    if (t->contains("classifiers")) select_classifiers(c, string_list(*t, "classifiers", "evaluation"));
    read(*t, "folds", "evaluation", x.folds);
    if (auto v = get<std::int64_t>(*t, "seed", "evaluation")) {
      if (*v < 0) throw ConfigError("config: evaluation.seed must be non-negative");
      x.seed = static_cast<std::uint64_t>(*v);
    }
    read(*t, "inner_folds", "evaluation", x.inner_folds);
    read(*t, "fusion_step", "evaluation", x.fusion_step);
    if (auto v = get<std::string>(*t, "aggregation", "evaluation")) x.aggregation = parse_aggregation(*v);
  }
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_pipeline_config(ss.str(), path.parent_path());
}

void apply_overrides(PipelineConfig& c, const RunOverrides& o) {
  if (o.modalities) c.experiment.modalities = parse_modality_list(*o.modalities);
  if (o.expressions) c.experiment.expressions = parse_expression_source(*o.expressions);
  if (o.expression_subset) c.experiment.expression_subset = parse_expression_list(*o.expression_subset);
  if (o.classifiers) select_classifiers(c, *o.classifiers);
  if (o.seed) c.experiment.seed = *o.seed;
  if (o.folds) c.experiment.folds = *o.folds;
  if (o.fold_plan) c.fold_plan = *o.fold_plan;
  if (o.workers) c.workers = *o.workers;
  if (o.output_dir) c.output_dir = *o.output_dir;
  if (o.aggregation) c.experiment.aggregation = parse_aggregation(*o.aggregation);
}

bool PipelineConfig::expression_enabled() const {
  return experiment.modalities[static_cast<std::size_t>(Modality::kExpression)];
}

ModalityNeeds PipelineConfig::needs() const {
  const auto& m = experiment.modalities;
  return {m[static_cast<std::size_t>(Modality::kMotion)] || expression_enabled(),
          m[static_cast<std::size_t>(Modality::kAudio)], m[static_cast<std::size_t>(Modality::kTranscript)]};
}

int PipelineConfig::worker_count() const {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

void PipelineConfig::validate() const {
  if (workers < 0) throw ConfigError("config: workers must be >= 0");
  auto exp = experiment;
  exp.workers = worker_count();
  exp.validate();
  extraction.mfcc.validate();
  if (!fs::is_regular_file(manifest)) throw ConfigError("config: manifest not found: " + manifest.string());
  if (fold_plan && !fs::is_regular_file(*fold_plan)) {
    throw ConfigError("config: fold plan not found: " + fold_plan->string());
  }
  const auto n = needs();
  if (n.transcript) {
    if (extraction.embeddings_path.empty()) throw ConfigError("config: transcript modality needs transcript.embeddings");
    if (!fs::is_regular_file(extraction.embeddings_path)) {
      throw ConfigError("config: embeddings not found: " + extraction.embeddings_path.string());
    }
  }
  if (expression_enabled() && experiment.expressions == ExpressionSource::kPredicted && !extraction.frame_column) {
    throw ConfigError("config: predicted expressions need motion.frame_column for clip segmentation");
  }
}

std::string extraction_config_to_json(const ExtractionConfig& c) {
  const auto& m = c.mfcc;
  json mfcc = {{"frame_length", m.frame_length},
               {"hop", m.hop},
               {"filter_count", m.filter_count},
               {"coefficient_count", m.coefficient_count},
               {"fft_size", m.fft_size},
               {"low_freq", m.low_freq},
               {"high_freq", m.high_freq ? json(*m.high_freq) : json(nullptr)},
               {"log_floor", m.log_floor},
               {"pre_emphasis", m.pre_emphasis},
               {"append_deltas", m.append_deltas}};
  json j = {{"motion_columns", {c.motion_columns.first, c.motion_columns.last}},
            {"frame_column", c.frame_column ? json(*c.frame_column) : json(nullptr)},
            {"mfcc", mfcc},
            {"embedding_limit", c.embedding_limit ? json(*c.embedding_limit) : json(nullptr)}};
  return j.dump();
}

}  // namespace veritas::cli
