#include "veritas/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

#include "binary_io.hpp"
#include "veritas/error.hpp"

namespace veritas {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t u32_at(std::string_view b, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + i])) << (8 * i);
  return v;
}

std::uint16_t u16_at(std::string_view b, std::size_t off) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[off]) |
                                    (static_cast<unsigned char>(b[off + 1]) << 8));
}

struct Format {
  std::uint16_t tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

}  // namespace

PcmSignal parse_wav(std::string_view bytes) {
  if (bytes.size() < 12) throw DataError("wav: truncated header");
  if (bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE") {
    throw DataError("wav: not a RIFF/WAVE file");
  }
  std::optional<Format> fmt;
  std::optional<std::string_view> data;
  std::size_t off = 12;
  while (off + 8 <= bytes.size()) {
    const auto id = bytes.substr(off, 4);
    std::uint32_t size = u32_at(bytes, off + 4);
    const std::size_t body = off + 8;
    if (id == "fmt ") {
      if (size < 16 || body + size > bytes.size()) throw DataError("wav: truncated header");
      Format f;
      f.tag = u16_at(bytes, body);
      f.channels = u16_at(bytes, body + 2);
      f.sample_rate = u32_at(bytes, body + 4);
      f.bits = u16_at(bytes, body + 14);
      if (f.tag == kFormatExtensible) {
        if (size < 40) throw DataError("wav: truncated extensible format header");
        f.tag = u16_at(bytes, body + 24);
      }
      fmt = f;
    } else if (id == "data") {
      const std::size_t available = bytes.size() - body;
      if (size == 0xFFFFFFFFu) size = static_cast<std::uint32_t>(available);
      if (size > available) throw DataError("wav: truncated data chunk");
      data = bytes.substr(body, size);
      if (fmt) break;
    }
    off = body + size + (size & 1);
  }
  if (!fmt) throw DataError("wav: truncated header (no fmt chunk)");
  if (!data) throw DataError("wav: no data chunk");

  const bool pcm16 = fmt->tag == kFormatPcm && fmt->bits == 16;
  const bool float32 = fmt->tag == kFormatFloat && fmt->bits == 32;
  if (!pcm16 && !float32) {
    throw DataError("wav: unsupported codec (format tag " + std::to_string(fmt->tag) + ", " +
                    std::to_string(fmt->bits) + " bits)");
  }
  if (fmt->channels != 1 && fmt->channels != 2) {
    throw DataError("wav: unsupported channel count " + std::to_string(fmt->channels));
  }
  if (fmt->sample_rate == 0) throw DataError("wav: zero sample rate");

  const std::size_t width = fmt->bits / 8;
  const std::size_t frame_bytes = width * fmt->channels;
  const std::size_t frames = data->size() / frame_bytes;
  PcmSignal out;
  out.sample_rate = static_cast<int>(fmt->sample_rate);
  out.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt->channels; ++c) {
      const std::size_t at = i * frame_bytes + c * width;
      double v;
      if (pcm16) {
        v = static_cast<std::int16_t>(u16_at(*data, at)) / 32768.0;
      } else {
        v = std::bit_cast<float>(u32_at(*data, at));
        if (!std::isfinite(v)) throw DataError("wav: non-finite sample at frame " + std::to_string(i));
        v = std::clamp(v, -1.0, 1.0);
      }
      acc += v;
    }
    out.samples[i] = acc / fmt->channels;
  }
  return out;
}

PcmSignal load_audio(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("audio file not found: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_wav(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_wav16(const std::filesystem::path& path, const PcmSignal& signal) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  const auto data_bytes = static_cast<std::uint32_t>(signal.samples.size() * 2);
  out.write("RIFF", 4);
  detail::put_le<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  detail::put_le<std::uint32_t>(out, 16);
  detail::put_le<std::uint16_t>(out, kFormatPcm);
  detail::put_le<std::uint16_t>(out, 1);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(signal.sample_rate));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(signal.sample_rate * 2));
  detail::put_le<std::uint16_t>(out, 2);
  detail::put_le<std::uint16_t>(out, 16);
  out.write("data", 4);
  detail::put_le<std::uint32_t>(out, data_bytes);
  for (double s : signal.samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto q = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(q));
  }
}

}  // namespace veritas
