#include "commands.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "veritas/cross_validation.hpp"
#include "veritas/error.hpp"
#include "veritas/hash.hpp"
#include "veritas/microexpression.hpp"
#include "veritas/report.hpp"
#include "veritas/transcript.hpp"

namespace veritas::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "veritas 0.1.0";
constexpr int kArtifactVersion = 1;

enum class Artifact { kMotion, kAudio, kTranscript, kClips };
constexpr std::array<Artifact, 4> kArtifacts = {Artifact::kMotion, Artifact::kAudio, Artifact::kTranscript,
                                                Artifact::kClips};

const char* artifact_name(Artifact a) {
  switch (a) {
    case Artifact::kMotion: return "motion";
    case Artifact::kAudio: return "audio";
    case Artifact::kTranscript: return "transcript";
    case Artifact::kClips: return "clips";
  }
  return "?";
}

std::string file_digest(const fs::path& p) {
  Sha256 h;
  h.update_file(p);
  return h.hex_digest();
}

// Content-hash keys of one video's artifacts; empty when not needed.
struct VideoKeys {
  std::array<std::string, 4> key;
  const std::string& operator[](Artifact a) const { return key[static_cast<std::size_t>(a)]; }
};

std::string artifact_key(Artifact a, const std::string& input_digest, const json& settings) {
  return sha256_hex(json{{"artifact", artifact_name(a)},
                         {"version", kArtifactVersion},
                         {"input", input_digest},
                         {"settings", settings}}
                        .dump());
}

class KeyPlanner {
 public:
  KeyPlanner(const PipelineConfig& c, const DatasetManifest& m) : config_(c), manifest_(m), needs_(c.needs()) {
    const auto& x = c.extraction;
    motion_settings_ = {{"columns", {x.motion_columns.first, x.motion_columns.last}},
                        {"frame_column", x.frame_column ? json(*x.frame_column) : json(nullptr)}};
    audio_settings_ = json::parse(extraction_config_to_json(x)).at("mfcc");
    if (needs_.transcript) {
      transcript_settings_ = {{"embeddings", file_digest(x.embeddings_path)},
                              {"embedding_limit", x.embedding_limit ? json(*x.embedding_limit) : json(nullptr)}};
    }
    clips_ = needs_.motion && c.expression_enabled() && x.frame_column.has_value();
  }

  VideoKeys keys(std::size_t i) const {
    const auto& rec = manifest_[i];
    VideoKeys k;
    try {
      if (needs_.motion) {
        k.key[0] = artifact_key(Artifact::kMotion, file_digest(manifest_.resolve(rec.motion_path)), motion_settings_);
        if (clips_) {
          k.key[3] = artifact_key(Artifact::kClips, k.key[0],
                                  {{"fps", config_.experiment.fps},
                                   {"clip_seconds", config_.experiment.clip_seconds},
                                   {"frame_count", rec.frame_count ? json(*rec.frame_count) : json(nullptr)}});
        }
      }
      if (needs_.audio) {
        k.key[1] = artifact_key(Artifact::kAudio, file_digest(manifest_.resolve(rec.audio_path)), audio_settings_);
      }
      if (needs_.transcript) {
        k.key[2] = artifact_key(Artifact::kTranscript, file_digest(manifest_.resolve(rec.transcript_path)),
                                transcript_settings_);
      }
    } catch (const Error& e) {
      throw DataError("video " + rec.video_id + ": " + e.what());
    }
    return k;
  }

 private:
  const PipelineConfig& config_;
  const DatasetManifest& manifest_;
  ModalityNeeds needs_;
  json motion_settings_, audio_settings_, transcript_settings_;
  bool clips_ = false;
};

fs::path artifact_path(const fs::path& cache, Artifact a, const std::string& key) {
  return cache / key.substr(0, 2) / (key + (a == Artifact::kClips ? ".json" : ".bag"));
}

// Write-then-rename so concurrent or interrupted runs never leave a torn artifact.
template <class Writer>
void publish(const fs::path& target, Writer&& write) {
  fs::create_directories(target.parent_path());
  std::ostringstream tid;
  tid << std::this_thread::get_id();
  const fs::path tmp = target.string() + ".tmp" + tid.str();
  write(tmp);
  fs::rename(tmp, target);
}

std::string clips_to_json(const ClipSet& set, double fps, double clip_seconds) {
  json clips = json::array();
  for (const auto& c : set.clips) {
    clips.push_back({{"begin_frame", c.begin_frame}, {"end_frame", c.end_frame}, {"rows", c.bag ? c.bag->size() : 0}});
  }
  return json{{"video_id", set.video_id}, {"fps", fps}, {"clip_seconds", clip_seconds}, {"clips", clips}}.dump(2) +
         "\n";
}

// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the
// failure of the lowest index so errors are reported deterministically.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (threads <= 1) {
    loop();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(loop);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
  if (!out) throw DataError("write failed: " + p.string());
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const LeakageError*>(&e)) return kExitLeakage;
  if (dynamic_cast<const ConfigError*>(&e)) return kExitUsage;
  return kExitData;
}

fs::path cache_directory(const PipelineConfig& c) {
  if (const char* env = std::getenv("VERITAS_CACHE_DIR"); env && *env) return env;
  if (c.cache_dir) return *c.cache_dir;
  return c.output_dir / "cache";
}

ExtractSummary cmd_extract(const PipelineConfig& config) {
  config.validate();
  const auto manifest = load_manifest(config.manifest);
  const auto cache = cache_directory(config);
  const KeyPlanner planner(config, manifest);

  std::once_flag embeddings_once;
  EmbeddingTable embeddings;
  std::atomic<std::size_t> computed{0}, hits{0};

  parallel_for(manifest.size(), config.worker_count(), [&](std::size_t i) {
    const auto& rec = manifest[i];
    const auto keys = planner.keys(i);
    std::optional<DescriptorBag> motion;
    for (auto a : kArtifacts) {
      const auto& key = keys[a];
      if (key.empty()) continue;
      const auto path = artifact_path(cache, a, key);
      if (fs::exists(path)) {
        ++hits;
        spdlog::info("cache hit: video {} {}", rec.video_id, artifact_name(a));
        continue;
      }
      ModalityNeeds one{a == Artifact::kMotion, a == Artifact::kAudio, a == Artifact::kTranscript};
      if (a == Artifact::kTranscript) {
        std::call_once(embeddings_once, [&] {
          embeddings = load_embeddings(config.extraction.embeddings_path, config.extraction.embedding_limit);
          spdlog::info("loaded {} word vectors of dimension {}", embeddings.size(), embeddings.dim());
        });
      }
      if (a == Artifact::kClips) {
        if (!motion) motion = load_bag(artifact_path(cache, Artifact::kMotion, keys[Artifact::kMotion]));
        ClipSet clips;
        try {
          clips = segment_clips(*motion, config.experiment.fps, config.experiment.clip_seconds, rec.frame_count,
                                rec.video_id);
        } catch (const Error& e) {
          throw DataError("video " + rec.video_id + ": " + e.what());
        }
        const auto text = clips_to_json(clips, config.experiment.fps, config.experiment.clip_seconds);
        publish(path, [&](const fs::path& tmp) { write_file(tmp, text); });
      } else {
        auto f = extract_video(manifest, i, config.extraction, &embeddings, one);
        const DescriptorBag& bag = a == Artifact::kMotion ? *f.motion : a == Artifact::kAudio ? *f.audio : *f.transcript;
        publish(path, [&](const fs::path& tmp) { save_bag(tmp, bag); });
        if (a == Artifact::kMotion) motion = std::move(f.motion);
        if (a == Artifact::kTranscript && f.transcript_oov > 0) {
          spdlog::debug("video {}: {} out-of-vocabulary tokens", rec.video_id, f.transcript_oov);
        }
      }
      ++computed;
      spdlog::debug("extracted: video {} {}", rec.video_id, artifact_name(a));
    }
  });
  ExtractSummary s{manifest.size(), computed.load(), hits.load()};
  spdlog::info("extract: {} videos, {} artifacts computed, {} cache hits", s.videos, s.computed, s.cache_hits);
  return s;
}

RunResult cmd_run(const PipelineConfig& config) {
  config.validate();
  const auto manifest = load_manifest(config.manifest);
  const auto cache = cache_directory(config);
  const KeyPlanner planner(config, manifest);

  std::optional<FoldPlan> plan;
  if (config.fold_plan) plan = load_fold_plan(*config.fold_plan);

  std::vector<VideoFeatures> features(manifest.size());
  std::vector<VideoKeys> keys(manifest.size());
  parallel_for(manifest.size(), config.worker_count(), [&](std::size_t i) {
    keys[i] = planner.keys(i);
    auto& f = features[i];
    for (auto a : {Artifact::kMotion, Artifact::kAudio, Artifact::kTranscript}) {
      const auto& key = keys[i][a];
      if (key.empty()) continue;
      const auto path = artifact_path(cache, a, key);
      if (!fs::exists(path)) {
        throw DataError("video " + manifest[i].video_id + ": " + artifact_name(a) +
                        " artifact not extracted (run `veritas extract` with this config first)");
      }
      auto bag = load_bag(path);
      (a == Artifact::kMotion ? f.motion : a == Artifact::kAudio ? f.audio : f.transcript) = std::move(bag);
    }
  });

  auto exp = config.experiment;
  exp.workers = config.worker_count();
  spdlog::info("run: {} videos, {} folds, seed {}", manifest.size(), plan ? plan->k : exp.folds, exp.seed);
  RunResult out;
  out.report = run_experiment(manifest, features, exp, plan ? &*plan : nullptr);
  auto& r = out.report;

  Sha256 inputs;
  for (const auto& k : keys) {
    for (const auto& s : k.key) inputs.update(s).update("\n");
  }
  const std::string inputs_digest = inputs.hex_digest();
  const std::string manifest_digest = file_digest(config.manifest);
  r.config_hash = sha256_hex(json{{"experiment", json::parse(r.config_json)},
                                  {"extraction", json::parse(extraction_config_to_json(config.extraction))},
                                  {"manifest", manifest_digest},
                                  {"inputs", inputs_digest}}
                                 .dump());
  r.provenance["tool"] = kToolVersion;
  r.provenance["manifest_sha256"] = manifest_digest;
  r.provenance["artifacts_sha256"] = inputs_digest;
  r.provenance["experiment_config_sha256"] = sha256_hex(r.config_json);
  r.provenance["extraction_config"] = extraction_config_to_json(config.extraction);
  r.provenance["fold_plan"] = config.fold_plan ? "file sha256 " + file_digest(*config.fold_plan) : "generated";

  fs::create_directories(config.output_dir);
  out.json_path = config.output_dir / "report.json";
  out.text_path = config.output_dir / "report.txt";
  out.bars_path = config.output_dir / "bars.csv";
  const auto json_text = report_to_json(r);
  const auto table = table_from_json(json_text);
  write_file(out.json_path, json_text);
  write_file(out.text_path, render_table(table));
  write_file(out.bars_path, render_bar_csv(table));
  out.score_paths = write_fold_score_csvs(r, config.output_dir / "scores");
  spdlog::info("run: wrote {} (config hash {})", out.json_path.string(), r.config_hash);
  return out;
}

std::string cmd_report(const fs::path& report_path, const std::optional<fs::path>& bars_csv) {
  if (!fs::is_regular_file(report_path)) throw DataError("report not found: " + report_path.string());
  const auto table = table_from_json(read_file(report_path));
  if (bars_csv) write_file(*bars_csv, render_bar_csv(table));
  return render_table(table);
}

ValidationSummary cmd_validate(const PipelineConfig& config) {
  config.validate();
  ValidationSummary s;
  const auto manifest = load_manifest(config.manifest);
  s.videos = manifest.size();
  s.identities = manifest.identities().size();
  auto count = [&](int label) {
    auto it = manifest.class_counts().find(label);
    return it == manifest.class_counts().end() ? std::size_t{0} : it->second;
  };
  s.positives = count(1);
  s.negatives = count(0);

  const auto needs = config.needs();
  for (const auto& rec : manifest.records()) {
    auto check = [&](bool needed, const std::string& p, const char* what) {
      if (!needed) return;
      if (p.empty()) {
        s.problems.push_back("video " + rec.video_id + ": no " + what + " path");
      } else if (!fs::is_regular_file(manifest.resolve(p))) {
        s.problems.push_back("video " + rec.video_id + ": " + what + " file not found: " + manifest.resolve(p).string());
      }
    };
    check(needs.motion, rec.motion_path, "motion");
    check(needs.audio, rec.audio_path, "audio");
    check(needs.transcript, rec.transcript_path, "transcript");
    if (config.expression_enabled() && config.experiment.expressions == ExpressionSource::kGroundTruth &&
        !rec.video_expression_labels && !rec.clip_expression_labels) {
      s.problems.push_back("video " + rec.video_id + ": ground-truth expressions requested but not annotated");
    }
  }
  const int k = config.experiment.folds;
  if (config.fold_plan) {
    try {
      load_fold_plan(*config.fold_plan).check_against(manifest);
    } catch (const Error& e) {
      s.problems.push_back(e.what());
    }
  } else if (s.identities < static_cast<std::size_t>(k)) {
    s.problems.push_back(std::to_string(s.identities) + " identities cannot fill " + std::to_string(k) + " folds");
  }
  return s;
}

}  // namespace veritas::cli
