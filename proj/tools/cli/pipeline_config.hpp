#pragma once

// Declarative run configuration read from TOML, plus command-line overrides.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "veritas/experiment.hpp"
#include "veritas/features.hpp"

namespace veritas::cli {

struct PipelineConfig {
  // Relative paths in the file resolve against the file's directory.
  std::filesystem::path manifest;
  std::filesystem::path output_dir = "veritas-out";
  std::optional<std::filesystem::path> cache_dir;  // VERITAS_CACHE_DIR wins over this
  std::optional<std::filesystem::path> fold_plan;
  int workers = 0;  // 0: available cores

  ExtractionConfig extraction;
  ExperimentConfig experiment;
  // Every kind with its configured hyperparameters; experiment.classifiers
  // is the selected subset, in this order.
  std::vector<ClassifierSpec> classifier_pool = default_classifier_specs();

  // Raw inputs needed by the enabled modalities.
  ModalityNeeds needs() const;
  bool expression_enabled() const;
  // Paths exist, modality subset non-empty, settings in range. Throws ConfigError.
  void validate() const;
  // Effective worker count (resolves 0).
  int worker_count() const;
};

PipelineConfig parse_pipeline_config(std::string_view toml_text, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// Flag values that replace config keys when present.
struct RunOverrides {
  std::optional<std::vector<std::string>> modalities;
  std::optional<std::string> expressions;  // "predicted" | "ground-truth"
  std::optional<std::vector<std::string>> expression_subset;
  std::optional<std::vector<std::string>> classifiers;
  std::optional<std::uint64_t> seed;
  std::optional<int> folds;
  std::optional<std::filesystem::path> fold_plan;
  std::optional<int> workers;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::string> aggregation;  // "pooled" | "fold-mean"
};

void apply_overrides(PipelineConfig& config, const RunOverrides& overrides);

ModalityMask parse_modality_list(const std::vector<std::string>& names);
ExpressionBits parse_expression_list(const std::vector<std::string>& names);
ExpressionSource parse_expression_source(std::string_view name);
AucAggregation parse_aggregation(std::string_view name);

// Canonical JSON of everything that shapes extracted artifacts.
std::string extraction_config_to_json(const ExtractionConfig& config);

}  // namespace veritas::cli
