#pragma once

// Serialization and rendering of experiment reports.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "veritas/experiment.hpp"

namespace veritas {

// Published reference values, shown for context in every rendered report.
struct ReferenceValue {
  std::string name;
  double value;
};
const std::vector<ReferenceValue>& reference_values();

// Deterministic JSON: sorted keys, fixed formatting.
std::string report_to_json(const ExperimentReport& report);

// The subset of a report needed for rendering.
struct ReportTable {
  std::vector<std::string> rows;
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<double>>> values;  // [row][column]
  std::string aggregation;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::optional<double> mean_detector_auc;
  std::vector<std::string> warnings;

  bool empty() const { return rows.empty() || columns.empty(); }
};

// Throws DataError for malformed input.
ReportTable table_from_json(const std::string& text);
ReportTable table_from_report(const ExperimentReport& report);

// Aligned text table; an empty grid renders an explicit "no results" line.
std::string render_table(const ReportTable& table);
// Long-form CSV (feature_set,classifier,auc) for plotting per-modality bars.
std::string render_bar_csv(const ReportTable& table);

// One CSV per fold and classifier under `dir`:
//   video_id,identity_id,label,motion,transcript,audio,expression,fused
// `fused` is the widest fusion row evaluated (the single row when none).
// Returns the written paths in order.
std::vector<std::filesystem::path> write_fold_score_csvs(const ExperimentReport& report,
                                                         const std::filesystem::path& dir);

}  // namespace veritas
