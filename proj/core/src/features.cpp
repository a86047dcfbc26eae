#include "veritas/features.hpp"

#include "veritas/audio.hpp"
#include "veritas/error.hpp"

namespace veritas {

VideoFeatures extract_video(const DatasetManifest& manifest, std::size_t index, const ExtractionConfig& config,
                            const EmbeddingTable* embeddings, const ModalityNeeds& needs) {
  const auto& rec = manifest[index];
  VideoFeatures out;
  try {
    if (needs.motion) {
      out.motion = load_trajectory_descriptors(manifest.resolve(rec.motion_path), config.motion_columns,
                                               config.frame_column);
    }
    if (needs.audio) out.audio = extract_mfcc(load_audio(manifest.resolve(rec.audio_path)), config.mfcc);
    if (needs.transcript) {
      if (!embeddings) throw ConfigError("transcript modality requested without an embedding table");
      const auto tokens = tokenize(read_text_file(manifest.resolve(rec.transcript_path)));
      auto emb = embed_transcript(*embeddings, tokens);
      out.transcript = std::move(emb.bag);
      out.transcript_oov = emb.oov_count;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw DataError("video " + rec.video_id + ": " + e.what());
  }
  return out;
}

}  // namespace veritas
