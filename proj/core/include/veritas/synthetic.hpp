#pragma once

// Seeded synthetic multimodal dataset written in the same on-disk formats
// the real pipeline reads: JSON-lines manifest, trajectory text files,
// 16-bit WAV, plain-text transcripts and an embedding table.

#include <cstdint>
#include <filesystem>

#include "veritas/dataset.hpp"
#include "veritas/features.hpp"

namespace veritas {

struct SyntheticConfig {
  int identities = 40;
  int min_videos_per_identity = 1;
  int max_videos_per_identity = 4;
  std::uint64_t seed = 1;

  double fps = 15.0;
  double clip_seconds = 4.0;
  double min_seconds = 8.0;
  double max_seconds = 16.0;

  std::size_t motion_dim = 16;
  double trajectories_per_frame = 2.0;

  int sample_rate = 16000;
  double audio_seconds = 2.0;

  std::size_t embedding_dim = 12;
  std::size_t vocabulary = 200;
  int min_tokens = 40;
  int max_tokens = 80;

  // Probability that a modality's planted cue agrees with the label. Each
  // modality draws its cue independently, so modalities err independently.
  double motion_reliability = 0.75;
  double audio_reliability = 0.75;
  double transcript_reliability = 0.75;
  double expression_reliability = 0.8;

  // Per-clip activation probability of each expression when the video's
  // expression cue is on / off.
  double expression_on_rate = 0.6;
  double expression_off_rate = 0.1;
  double expression_strength = 2.0;
};

struct SyntheticDataset {
  std::filesystem::path manifest_path;
  std::filesystem::path embeddings_path;
  DatasetManifest manifest;
  // Column layout and embedding path matching the written files.
  ExtractionConfig extraction;
};

SyntheticDataset write_synthetic_dataset(const SyntheticConfig& config, const std::filesystem::path& dir);

}  // namespace veritas
