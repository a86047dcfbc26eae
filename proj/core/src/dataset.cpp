#include "veritas/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "json.hpp"
#include "veritas/error.hpp"

namespace veritas {

using nlohmann::json;

namespace {

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

ExpressionBits bits_from_json(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != kExpressionCount) {
    throw DataError(ctx + "expression label vector must be an array of " +
                    std::to_string(kExpressionCount) + " bits");
  }
  ExpressionBits bits;
  for (std::size_t i = 0; i < kExpressionCount; ++i) {
    const auto& b = j[i];
    if (!b.is_number_integer() || (b.get<int>() != 0 && b.get<int>() != 1)) {
      throw DataError(ctx + "expression label entries must be 0 or 1");
    }
    bits[i] = b.get<int>() == 1;
  }
  return bits;
}

json bits_to_json(const ExpressionBits& bits) {
  json a = json::array();
  for (std::size_t i = 0; i < kExpressionCount; ++i) a.push_back(bits[i] ? 1 : 0);
  return a;
}

std::string required_string(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(ctx + "missing required field \"" + key + "\"");
  if (!it->is_string()) throw DataError(ctx + "field \"" + key + "\" must be a string");
  return it->get<std::string>();
}

VideoRecord record_from_json(const json& j, const std::string& ctx) {
  if (!j.is_object()) throw DataError(ctx + "record must be a JSON object");
  VideoRecord r;
  r.video_id = required_string(j, "video_id", ctx);
  r.identity_id = required_string(j, "identity_id", ctx);
  auto lab = j.find("label");
  if (lab == j.end()) throw DataError(ctx + "missing required field \"label\"");
  if (!lab->is_number_integer() || (lab->get<long long>() != 0 && lab->get<long long>() != 1)) {
    throw DataError(ctx + "label must be 0 or 1, got " + lab->dump());
  }
  r.label = lab->get<int>();
  r.motion_path = required_string(j, "motion_path", ctx);
  r.audio_path = required_string(j, "audio_path", ctx);
  r.transcript_path = required_string(j, "transcript_path", ctx);
  if (auto it = j.find("clip_expression_labels"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw DataError(ctx + "clip_expression_labels must be an array");
    std::vector<ExpressionBits> clips;
    for (const auto& c : *it) clips.push_back(bits_from_json(c, ctx));
    r.clip_expression_labels = std::move(clips);
  }
  if (auto it = j.find("video_expression_labels"); it != j.end() && !it->is_null()) {
    r.video_expression_labels = bits_from_json(*it, ctx);
  }
  if (auto it = j.find("frame_count"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<long long>() <= 0) {
      throw DataError(ctx + "frame_count must be a positive integer");
    }
    r.frame_count = it->get<std::int64_t>();
  }
  return r;
}

json record_to_json(const VideoRecord& r) {
  json j = {{"video_id", r.video_id},
            {"identity_id", r.identity_id},
            {"label", r.label},
            {"motion_path", r.motion_path},
            {"audio_path", r.audio_path},
            {"transcript_path", r.transcript_path}};
  if (r.clip_expression_labels) {
    json clips = json::array();
    for (const auto& b : *r.clip_expression_labels) clips.push_back(bits_to_json(b));
    j["clip_expression_labels"] = std::move(clips);
  }
  if (r.video_expression_labels) j["video_expression_labels"] = bits_to_json(*r.video_expression_labels);
  if (r.frame_count) j["frame_count"] = *r.frame_count;
  return j;
}

}  // namespace

DatasetManifest::DatasetManifest(std::vector<VideoRecord> records, std::filesystem::path base_dir)
    : records_(std::move(records)), base_dir_(std::move(base_dir)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.label != 0 && r.label != 1) {
      throw DataError("record " + r.video_id + ": label must be 0 or 1");
    }
    if (!by_video_.emplace(r.video_id, i).second) {
      throw DataError("duplicate video_id \"" + r.video_id + "\"");
    }
    ++class_counts_[r.label];
    identities_[r.identity_id].push_back(i);
  }
  if (class_counts_[0] == 0 || class_counts_[1] == 0) {
    throw DataError("manifest must contain both truthful (0) and deceptive (1) records");
  }
}

std::optional<std::size_t> DatasetManifest::find(const std::string& video_id) const {
  auto it = by_video_.find(video_id);
  if (it == by_video_.end()) return std::nullopt;
  return it->second;
}

std::filesystem::path DatasetManifest::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir_.empty()) return p;
  return base_dir_ / p;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("manifest not found: " + path.string());
  std::vector<VideoRecord> records;
  std::map<std::string, std::size_t> first_line;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string ctx = where(path, line_no);
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw DataError(ctx + "invalid JSON: " + e.what());
    }
    VideoRecord r = record_from_json(j, ctx);
    auto [it, inserted] = first_line.emplace(r.video_id, line_no);
    if (!inserted) {
      throw DataError(ctx + "duplicate video_id \"" + r.video_id + "\" (first seen on line " +
                      std::to_string(it->second) + ")");
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DataError(path.string() + ": manifest has no records");
  try {
    return DatasetManifest(std::move(records), path.parent_path());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : manifest.records()) out << record_to_json(r).dump() << '\n';
}

DescriptorBag load_trajectory_descriptors(const std::filesystem::path& path, ColumnRange columns,
                                          std::optional<std::size_t> frame_column) {
  if (columns.last < columns.first) throw ConfigError("descriptor column range is reversed");
  std::ifstream in(path);
  if (!in) throw DataError("descriptor file not found: " + path.string());

  std::vector<double> values;
  std::vector<std::int64_t> frames;
  std::vector<double> fields;
  std::size_t expected_columns = 0;
  std::size_t line_no = 0;
  std::string text;
  while (std::getline(in, text)) {
    ++line_no;
    fields.clear();
    const char* p = text.data();
    const char* end = p + text.size();
    std::size_t col = 0;
    while (true) {
      while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
      if (p == end) break;
      const char* tok_end = p;
      while (tok_end < end && *tok_end != ' ' && *tok_end != '\t' && *tok_end != '\r') ++tok_end;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(p, tok_end, v);
      if (ec != std::errc() || ptr != tok_end) {
        throw DataError(where(path, line_no) + "non-numeric token \"" + std::string(p, tok_end) +
                        "\" at column " + std::to_string(col));
      }
      if (!std::isfinite(v)) {
        throw DataError(where(path, line_no) + "non-finite value at column " + std::to_string(col));
      }
      fields.push_back(v);
      ++col;
      p = tok_end;
    }
    if (fields.empty()) continue;
    if (expected_columns == 0) {
      expected_columns = fields.size();
      if (columns.last >= expected_columns) {
        throw DataError(where(path, line_no) + "column range " + std::to_string(columns.first) +
                        ".." + std::to_string(columns.last) + " exceeds " +
                        std::to_string(expected_columns) + " columns");
      }
      if (frame_column && *frame_column >= expected_columns) {
        throw DataError(where(path, line_no) + "frame column " + std::to_string(*frame_column) +
                        " exceeds " + std::to_string(expected_columns) + " columns");
      }
    } else if (fields.size() != expected_columns) {
      throw DataError(where(path, line_no) + "ragged line: " + std::to_string(fields.size()) +
                      " columns, expected " + std::to_string(expected_columns));
    }
    values.insert(values.end(), fields.begin() + static_cast<std::ptrdiff_t>(columns.first),
                  fields.begin() + static_cast<std::ptrdiff_t>(columns.last + 1));
    if (frame_column) frames.push_back(static_cast<std::int64_t>(std::llround(fields[*frame_column])));
  }
  if (values.empty()) throw DataError(path.string() + ": empty descriptor file");
  return DescriptorBag(columns.width(), std::move(values), std::move(frames));
}

}  // namespace veritas
