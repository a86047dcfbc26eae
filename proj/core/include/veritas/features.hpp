#pragma once

// Loading the raw per-video inputs named by a manifest into descriptor bags.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "veritas/dataset.hpp"
#include "veritas/descriptor_bag.hpp"
#include "veritas/fusion.hpp"
#include "veritas/mfcc.hpp"
#include "veritas/transcript.hpp"

namespace veritas {

struct ExtractionConfig {
  ColumnRange motion_columns = idt::kMbh;
  std::optional<std::size_t> frame_column = idt::kFrameColumn;
  MfccConfig mfcc;
  std::filesystem::path embeddings_path;
  std::optional<std::size_t> embedding_limit;
};

// Bags for one video; a bag is empty when its modality was not requested.
struct VideoFeatures {
  std::optional<DescriptorBag> motion;  // rows carry frame indices when frame_column is set
  std::optional<DescriptorBag> audio;
  std::optional<DescriptorBag> transcript;
  std::size_t transcript_oov = 0;
};

// Which raw inputs a run needs. Expression features are derived from motion.
struct ModalityNeeds {
  bool motion = true;
  bool audio = true;
  bool transcript = true;
};

// Errors are rethrown as DataError prefixed with "video <id>: ".
VideoFeatures extract_video(const DatasetManifest& manifest, std::size_t index, const ExtractionConfig& config,
                            const EmbeddingTable* embeddings, const ModalityNeeds& needs = {});

}  // namespace veritas
