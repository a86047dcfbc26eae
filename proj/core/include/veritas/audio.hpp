#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

namespace veritas {

/// Mono PCM audio with samples in [-1, 1].
struct PcmSignal {
  int sample_rate = 0;
  std::vector<double> samples;
};

// Reads an uncompressed WAV (16-bit integer or 32-bit float PCM, mono or
// stereo). Stereo is averaged to mono; 16-bit samples are divided by 32768,
// so -32768 maps to exactly -1.0.
PcmSignal load_audio(const std::filesystem::path& path);
PcmSignal parse_wav(std::string_view bytes);

// Writes 16-bit PCM, clamping to [-1, 1 - 2^-15].
void write_wav16(const std::filesystem::path& path, const PcmSignal& signal);

}  // namespace veritas
