#include "veritas/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "veritas/error.hpp"

namespace veritas {

using nlohmann::json;

const std::vector<ReferenceValue>& reference_values() {
  static const std::vector<ReferenceValue> refs = {
      {"all_modalities_linear_svm", 0.8773},
      {"ground_truth_expressions_logistic_regression", 0.9221},
      {"mean_expression_detector", 0.6511},
      {"lips_protruded_detector", 0.7512},
  };
  return refs;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string report_to_json(const ExperimentReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) rows.push_back(row.name);
  json kinds = json::array(), hyper = json::array();
  for (const auto& s : r.classifiers) {
    kinds.push_back(to_string(s.kind));
    hyper.push_back(json::parse(spec_to_json(s)));
  }
  json grid = json::array();
  for (const auto& line : r.grid) {
    json jl = json::array();
    for (const auto& cell : line) {
      json folds = json::array();
      for (const auto& f : cell.fold_auc) folds.push_back(opt(f));
      jl.push_back({{"pooled", cell.pooled_auc},
                    {"fold_mean", opt(cell.mean_fold_auc)},
                    {"folds", folds},
                    {"value", cell.value(r.aggregation)}});
    }
    grid.push_back(jl);
  }
  json folds = json::array();
  for (const auto& d : r.folds) {
    folds.push_back({{"fold", d.fold},
                     {"test_identities", d.test_identities},
                     {"train_videos", d.train_videos},
                     {"train_positive", d.train_positive},
                     {"train_negative", d.train_videos - d.train_positive},
                     {"test_videos", d.test_videos},
                     {"test_positive", d.test_positive},
                     {"test_negative", d.test_videos - d.test_positive},
                     {"gmm_ids", d.gmm_ids}});
  }
  json fusion = json::array();
  for (const auto& f : r.fusion) {
    fusion.push_back({{"fold", f.fold},
                      {"row", r.rows[f.row].name},
                      {"classifier", to_string(r.classifiers[f.classifier].kind)},
                      {"weights", f.weights.alpha},
                      {"inner_auc", f.inner_auc}});
  }
  json det = json::object();
  for (std::size_t e = 0; e < kExpressionCount; ++e) det[std::string(kExpressionNames[e])] = opt(r.detector_auc[e]);
  json refs = json::object();
  for (const auto& ref : reference_values()) refs[ref.name] = ref.value;

  json j = {{"format", "veritas-report"},
            {"version", 1},
            {"config_hash", r.config_hash},
            {"seed", r.seed},
            {"config", json::parse(r.config_json)},
            {"provenance", r.provenance},
            {"aggregation", r.aggregation == AucAggregation::kPooled ? "pooled" : "fold-mean"},
            {"rows", rows},
            {"classifiers", kinds},
            {"hyperparameters", hyper},
            {"grid", grid},
            {"folds", folds},
            {"fold_plan", json::parse(fold_plan_to_json(r.plan))},
            {"fusion", fusion},
            {"detectors", {{"auc", det}, {"mean", opt(r.mean_detector_auc)}}},
            {"leakage", {{"objects_checked", r.audit.entries().size()}, {"violations", 0}}},
            {"warnings", r.warnings},
            {"references", refs}};
  return j.dump(2) + "\n";
}

ReportTable table_from_report(const ExperimentReport& r) { return table_from_json(report_to_json(r)); }

ReportTable table_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    if (j.at("format").get<std::string>() != "veritas-report") throw DataError("report: wrong format tag");
    ReportTable t;
    t.rows = j.at("rows").get<std::vector<std::string>>();
    t.columns = j.at("classifiers").get<std::vector<std::string>>();
    t.aggregation = j.value("aggregation", std::string("pooled"));
    t.config_hash = j.value("config_hash", std::string());
    t.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("detectors") && j["detectors"].contains("mean") && !j["detectors"]["mean"].is_null()) {
      t.mean_detector_auc = j["detectors"]["mean"].get<double>();
    }
    if (j.contains("warnings")) t.warnings = j["warnings"].get<std::vector<std::string>>();
    const auto& grid = j.at("grid");
    if (grid.size() != t.rows.size()) throw DataError("report: grid row count does not match rows");
    for (const auto& line : grid) {
      if (line.size() != t.columns.size()) throw DataError("report: grid column count does not match classifiers");
      std::vector<std::optional<double>> vals;
      for (const auto& cell : line) {
        const auto& v = cell.at("value");
        vals.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
      }
      t.values.push_back(std::move(vals));
    }
    return t;
  } catch (const json::exception& e) {
    throw DataError(std::string("report: ") + e.what());
  }
}

std::string render_table(const ReportTable& t) {
  std::ostringstream out;
  if (t.empty()) {
    out << "no results\n";
    return out.str();
  }
  const std::string head = "Feature set";
  std::size_t w0 = head.size();
  for (const auto& r : t.rows) w0 = std::max(w0, r.size());
  std::vector<std::size_t> w;
  for (const auto& c : t.columns) w.push_back(std::max<std::size_t>(c.size(), 6));

  auto pad_right = [](const std::string& s, std::size_t n) { return s + std::string(n - s.size(), ' '); };
  auto pad_left = [](const std::string& s, std::size_t n) { return std::string(n - s.size(), ' ') + s; };

  out << "AUC-PR (" << t.aggregation << " out-of-fold)\n";
  out << pad_right(head, w0);
  for (std::size_t c = 0; c < t.columns.size(); ++c) out << "  " << pad_left(t.columns[c], w[c]);
  out << '\n';
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out << pad_right(t.rows[r], w0);
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      const auto& v = t.values[r][c];
      out << "  " << pad_left(v ? fixed4(*v) : "-", w[c]);
    }
    out << '\n';
  }
  if (t.mean_detector_auc) out << "\nmean expression detector AUC-PR: " << fixed4(*t.mean_detector_auc) << '\n';
  out << "\nconfig hash: " << t.config_hash << "\nseed: " << t.seed << '\n';
  out << "published reference values (original dataset, not reproducible here):\n";
  for (const auto& ref : reference_values()) out << "  " << ref.name << ": " << fixed4(ref.value) << '\n';
  for (const auto& w2 : t.warnings) out << "warning: " << w2 << '\n';
  return out.str();
}

std::string render_bar_csv(const ReportTable& t) {
  std::ostringstream out;
  out << "# config_hash=" << t.config_hash << " seed=" << t.seed << '\n';
  out << "feature_set,classifier,auc\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      out << t.rows[r] << ',' << t.columns[c] << ',';
      if (t.values[r][c]) out << fixed4(*t.values[r][c]);
      out << '\n';
    }
  }
  return out.str();
}

std::vector<std::filesystem::path> write_fold_score_csvs(const ExperimentReport& report,
                                                         const std::filesystem::path& dir) {
  std::size_t fused_row = 0;
  std::size_t widest = 0;
  for (std::size_t r = 0; r < report.rows.size(); ++r) {
    const auto& m = report.rows[r].modalities;
    const auto n = static_cast<std::size_t>(std::count(m.begin(), m.end(), true));
    if (n > widest) {
      widest = n;
      fused_row = r;
    }
  }
  ModalityMask used{};
  for (const auto& row : report.rows) {
    for (std::size_t i = 0; i < kModalityCount; ++i) used[i] = used[i] || row.modalities[i];
  }

  std::vector<std::filesystem::path> written;
  std::filesystem::create_directories(dir);
  for (std::size_t f = 0; f < report.folds.size(); ++f) {
    for (std::size_t c = 0; c < report.classifiers.size(); ++c) {
      char name[96];
      std::snprintf(name, sizeof name, "fold-%02zu-%s.csv", f, std::string(to_string(report.classifiers[c].kind)).c_str());
      const auto path = dir / name;
      std::ofstream out(path, std::ios::binary);
      if (!out) throw DataError("cannot write " + path.string());
      out << "# config_hash=" << report.config_hash << " seed=" << report.seed << '\n';
      out << "video_id,identity_id,label,motion,transcript,audio,expression,fused\n";
      for (const auto& v : report.videos) {
        if (v.fold != static_cast<int>(f)) continue;
        out << v.video_id << ',' << v.identity_id << ',' << v.label;
        char buf[40];
        for (std::size_t m = 0; m < kModalityCount; ++m) {
          out << ',';
          if (used[m]) {
            std::snprintf(buf, sizeof buf, "%.17g", v.modality_scores[c][m]);
            out << buf;
          }
        }
        std::snprintf(buf, sizeof buf, "%.17g", v.row_scores[c][fused_row]);
        out << ',' << buf << '\n';
      }
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace veritas
