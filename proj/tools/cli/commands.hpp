#pragma once

// The four subcommands as library calls, so tests can drive them directly.

#include <cstddef>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pipeline_config.hpp"
#include "veritas/experiment.hpp"

namespace veritas::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitLeakage = 3 };

// Maps a caught exception to the process exit code.
int exit_code_for(const std::exception& e);

// VERITAS_CACHE_DIR, else config.cache_dir, else <output_dir>/cache.
std::filesystem::path cache_directory(const PipelineConfig& config);

struct ExtractSummary {
  std::size_t videos = 0;
  std::size_t computed = 0;    // artifacts written
  std::size_t cache_hits = 0;  // artifacts already present
};

// Per-video motion bags, MFCC bags, transcript bags and clip segmentations,
// stored under content-hash keys. Idempotent.
ExtractSummary cmd_extract(const PipelineConfig& config);

struct RunResult {
  ExperimentReport report;
  std::filesystem::path json_path;
  std::filesystem::path text_path;
  std::filesystem::path bars_path;
  std::vector<std::filesystem::path> score_paths;
};

// Requires extracted artifacts. Writes report.json, report.txt, bars.csv and
// scores/fold-XX-<classifier>.csv under config.output_dir.
RunResult cmd_run(const PipelineConfig& config);

// Rendered table of a saved report; writes the bar CSV when `bars_csv` is set.
std::string cmd_report(const std::filesystem::path& report_path,
                       const std::optional<std::filesystem::path>& bars_csv = std::nullopt);

struct ValidationSummary {
  std::size_t videos = 0;
  std::size_t identities = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::vector<std::string> problems;  // empty when everything checks out
};

ValidationSummary cmd_validate(const PipelineConfig& config);

}  // namespace veritas::cli
