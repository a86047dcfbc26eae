#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "veritas/audio.hpp"
#include "veritas/descriptor_bag.hpp"
#include "veritas/matrix.hpp"

namespace veritas {

struct MfccConfig {
  double frame_length = 0.025;  // seconds
  double hop = 0.010;           // seconds
  int filter_count = 26;
  int coefficient_count = 13;  // includes coefficient 0
  // Rounded up to a power of two no smaller than the frame length in samples.
  std::size_t fft_size = 512;
  double low_freq = 0.0;
  std::optional<double> high_freq;  // unset: Nyquist
  double log_floor = 1e-10;
  double pre_emphasis = 0.97;
  // Appends first and second order regression deltas (dim x3).
  bool append_deltas = false;

  void validate() const;
};

struct FrameGeometry {
  std::size_t frame_samples = 0;
  std::size_t hop_samples = 0;
  std::size_t fft_size = 0;
};

FrameGeometry frame_geometry(const MfccConfig& config, int sample_rate);

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Pre-emphasized, Hamming-windowed frames, one row per frame. There are
// floor((N - frame_samples) / hop_samples) + 1 frames.
Matrix frame_signal(const PcmSignal& signal, const MfccConfig& config);

struct MelFilterbank {
  Matrix weights;                   // filter_count x (fft_size/2 + 1)
  std::vector<double> centers_hz;   // strictly increasing
};

// Triangular filters with centers equally spaced in mel between low_freq and
// high_freq. Each triangle rises from the previous center to its own and
// falls to the next, evaluated at the FFT bin frequencies.
MelFilterbank mel_filterbank(const MfccConfig& config, int sample_rate);

// One row per frame: periodogram -> mel energies -> log -> orthonormal DCT-II,
// first coefficient_count coefficients.
DescriptorBag extract_mfcc(const PcmSignal& signal, const MfccConfig& config = {});

// In-place iterative radix-2 FFT. Size must be a power of two.
void fft(std::vector<std::complex<double>>& data);
// |FFT|^2 / fft_size for bins 0..fft_size/2 of a zero-padded frame.
std::vector<double> periodogram(std::span<const double> frame, std::size_t fft_size);

std::vector<double> dct2_orthonormal(std::span<const double> x);
// Inverse of dct2_orthonormal (orthonormal DCT-III).
std::vector<double> dct3_orthonormal(std::span<const double> c);

std::size_t next_power_of_two(std::size_t n);

}  // namespace veritas
