#include "veritas/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "veritas/audio.hpp"
#include "veritas/error.hpp"
#include "veritas/microexpression.hpp"
#include "veritas/random.hpp"

namespace veritas {

namespace {

constexpr std::size_t kBackgroundClusters = 4;

std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

void validate(const SyntheticConfig& c) {
  if (c.identities < 2) throw ConfigError("synthetic: need at least 2 identities");
  if (c.min_videos_per_identity < 1 || c.max_videos_per_identity < c.min_videos_per_identity) {
    throw ConfigError("synthetic: bad videos-per-identity range");
  }
  if (c.motion_dim < kExpressionCount + 4) throw ConfigError("synthetic: motion_dim must be >= 9");
  if (!(c.min_seconds > 0.0) || c.max_seconds < c.min_seconds) throw ConfigError("synthetic: bad duration range");
  if (c.vocabulary < 2 || c.embedding_dim < 2) throw ConfigError("synthetic: vocabulary too small");
  if (c.min_tokens < 1 || c.max_tokens < c.min_tokens) throw ConfigError("synthetic: bad token range");
}

struct Cues {
  bool motion, audio, transcript, expression;
};

void write_motion(const std::filesystem::path& path, const SyntheticConfig& c, Rng& rng, std::int64_t frames,
                  const std::vector<std::pair<std::int64_t, std::int64_t>>& windows,
                  const std::vector<ExpressionBits>& active, bool cue, const std::vector<double>& identity_offset,
                  const std::vector<std::vector<double>>& background) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const std::size_t d = c.motion_dim;
  const double cue_rate = cue ? 0.25 : 0.05;
  std::vector<double> x(d);
  std::size_t clip = 0;
  char buf[32];
  const double whole = std::floor(c.trajectories_per_frame);
  const double frac = c.trajectories_per_frame - whole;
  for (std::int64_t t = 0; t < frames; ++t) {
    while (clip + 1 < windows.size() && t >= windows[clip].second) ++clip;
    const int count = static_cast<int>(whole) + (rng.bernoulli(frac) ? 1 : 0);
    for (int r = 0; r < count; ++r) {
      const bool is_cue = rng.bernoulli(cue_rate);
      const auto& centre = background[is_cue ? kBackgroundClusters : rng.index(kBackgroundClusters)];
      for (std::size_t j = 0; j < d; ++j) x[j] = centre[j] + identity_offset[j] + rng.normal();
      for (std::size_t e = 0; e < kExpressionCount; ++e) {
        if (active[clip][e] && rng.bernoulli(0.5)) x[d - kExpressionCount + e] += c.expression_strength;
      }
      out << t;
      for (double v : x) {
        std::snprintf(buf, sizeof buf, " %.6g", v);
        out << buf;
      }
      out << '\n';
    }
  }
}

void write_audio(const std::filesystem::path& path, const SyntheticConfig& c, Rng& rng, double f0, bool cue) {
  PcmSignal s;
  s.sample_rate = c.sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(c.audio_seconds * c.sample_rate));
  s.samples.resize(n);
  // The cue is a brighter timbre: a stronger second harmonic.
  const double h2 = cue ? 0.3 : 0.08;
  const double pitch = f0 * rng.uniform(0.95, 1.05);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / c.sample_rate;
    const double v = 0.3 * std::sin(two_pi * pitch * t) + h2 * std::sin(two_pi * 2.0 * pitch * t) +
                     0.05 * std::sin(two_pi * 3.0 * pitch * t) + 0.03 * rng.normal();
    s.samples[i] = std::clamp(v, -1.0, 1.0);
  }
  write_wav16(path, s);
}

// Cue transcripts prefer words whose embeddings lean toward a hidden direction.
void write_transcript(const std::filesystem::path& path, const SyntheticConfig& c, Rng& rng, bool cue,
                      const std::vector<double>& lean) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const int n = c.min_tokens + static_cast<int>(rng.index(static_cast<std::size_t>(c.max_tokens - c.min_tokens + 1)));
  for (int i = 0; i < n; ++i) {
    std::string w;
    if (rng.bernoulli(0.03)) {
      w = numbered("oov", rng.index(1000), 3);
    } else {
      std::size_t pick = rng.index(c.vocabulary);
      if (cue && rng.bernoulli(0.6)) {
        for (int k = 0; k < 2; ++k) {
          const std::size_t other = rng.index(c.vocabulary);
          if (lean[other] > lean[pick]) pick = other;
        }
      }
      w = numbered("w", pick, 3);
    }
    if (rng.bernoulli(0.1)) w[0] = 'W';
    out << w;
    if (i + 1 < n) out << (rng.bernoulli(0.1) ? ". " : " ");
  }
  out << ".\n";
}

// Returns each word's projection on the hidden cue direction.
std::vector<double> write_embeddings(const std::filesystem::path& path, const SyntheticConfig& c, Rng& rng) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  std::vector<double> dir(c.embedding_dim);
  double norm = 0.0;
  for (auto& v : dir) {
    v = rng.normal();
    norm += v * v;
  }
  for (auto& v : dir) v /= std::sqrt(norm);
  std::vector<double> lean(c.vocabulary, 0.0);
  std::vector<double> e(c.embedding_dim);
  char buf[32];
  for (std::size_t w = 0; w < c.vocabulary; ++w) {
    out << numbered("w", w, 3);
    for (std::size_t j = 0; j < c.embedding_dim; ++j) {
      e[j] = rng.normal();
      lean[w] += e[j] * dir[j];
      std::snprintf(buf, sizeof buf, " %.6g", e[j]);
      out << buf;
    }
    out << '\n';
  }
  return lean;
}

}  // namespace

SyntheticDataset write_synthetic_dataset(const SyntheticConfig& c, const std::filesystem::path& dir) {
  validate(c);
  namespace fs = std::filesystem;
  fs::create_directories(dir / "motion");
  fs::create_directories(dir / "audio");
  fs::create_directories(dir / "transcripts");

  Rng rng(c.seed);
  std::vector<std::vector<double>> centres(kBackgroundClusters + 1, std::vector<double>(c.motion_dim, 0.0));
  for (std::size_t k = 0; k < kBackgroundClusters; ++k) {
    for (auto& v : centres[k]) v = 1.5 * rng.normal();
  }
  // The cue cluster is offset from the origin on the first four dimensions.
  for (std::size_t j = 0; j < 4; ++j) centres[kBackgroundClusters][j] = 2.5;

  SyntheticDataset ds;
  ds.embeddings_path = dir / "embeddings.txt";
  Rng erng(derive_seed(c.seed, 1));
  const auto lean = write_embeddings(ds.embeddings_path, c, erng);

  std::vector<VideoRecord> records;
  std::size_t video = 0;
  for (int p = 0; p < c.identities; ++p) {
    Rng prng(derive_seed(c.seed, 1000 + static_cast<std::uint64_t>(p)));
    std::vector<double> offset(c.motion_dim);
    for (auto& v : offset) v = 0.5 * prng.normal();
    const double f0 = 150.0 + 150.0 * prng.uniform();
    const int count = c.min_videos_per_identity +
                      static_cast<int>(prng.index(
                          static_cast<std::size_t>(c.max_videos_per_identity - c.min_videos_per_identity + 1)));
    for (int v = 0; v < count; ++v, ++video) {
      Rng vr(derive_seed(c.seed, 100000 + video));
      VideoRecord rec;
      rec.video_id = numbered("v", video + 1, 3);
      rec.identity_id = numbered("p", static_cast<std::size_t>(p + 1), 2);
      rec.label = vr.bernoulli(0.5) ? 1 : 0;
      const bool y = rec.label == 1;
      const Cues cue{vr.bernoulli(c.motion_reliability) ? y : !y, vr.bernoulli(c.audio_reliability) ? y : !y,
                     vr.bernoulli(c.transcript_reliability) ? y : !y,
                     vr.bernoulli(c.expression_reliability) ? y : !y};

      const double seconds = vr.uniform(c.min_seconds, c.max_seconds);
      const auto frames = std::max<std::int64_t>(1, std::llround(seconds * c.fps));
      const auto windows = clip_windows(frames, c.fps, c.clip_seconds);
      std::vector<ExpressionBits> active(windows.size());
      for (auto& bits : active) {
        for (std::size_t e = 0; e < kExpressionCount; ++e) {
          bits[e] = vr.bernoulli(cue.expression ? c.expression_on_rate : c.expression_off_rate);
        }
      }
      rec.frame_count = frames;
      rec.clip_expression_labels = active;
      rec.motion_path = "motion/" + rec.video_id + ".txt";
      rec.audio_path = "audio/" + rec.video_id + ".wav";
      rec.transcript_path = "transcripts/" + rec.video_id + ".txt";

      write_motion(dir / rec.motion_path, c, vr, frames, windows, active, cue.motion, offset, centres);
      write_audio(dir / rec.audio_path, c, vr, f0, cue.audio);
      write_transcript(dir / rec.transcript_path, c, vr, cue.transcript, lean);
      records.push_back(std::move(rec));
    }
  }
  // Guarantee both classes on tiny configurations.
  bool pos = false, neg = false;
  for (const auto& r : records) (r.label == 1 ? pos : neg) = true;
  if (!pos) records.front().label = 1;
  if (!neg) records.front().label = 0;

  ds.manifest_path = dir / "manifest.jsonl";
  ds.manifest = DatasetManifest(std::move(records), dir);
  write_manifest(ds.manifest_path, ds.manifest);
  ds.extraction.motion_columns = ColumnRange{1, c.motion_dim};
  ds.extraction.frame_column = 0;
  ds.extraction.embeddings_path = ds.embeddings_path;
  return ds;
}

}  // namespace veritas
