#include "veritas/mfcc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "veritas/error.hpp"

namespace veritas {

void MfccConfig::validate() const {
  if (!(hop > 0.0) || !(frame_length > hop)) {
    throw ConfigError("mfcc: require frame_length > hop > 0");
  }
  if (filter_count < 1) throw ConfigError("mfcc: filter_count must be positive");
  if (coefficient_count < 1 || coefficient_count > filter_count) {
    throw ConfigError("mfcc: coefficient_count must lie in [1, filter_count]");
  }
  if (!(log_floor > 0.0)) throw ConfigError("mfcc: log_floor must be positive");
  if (!(pre_emphasis >= 0.0 && pre_emphasis < 1.0)) {
    throw ConfigError("mfcc: pre_emphasis must lie in [0, 1)");
  }
  if (low_freq < 0.0) throw ConfigError("mfcc: low_freq must be >= 0");
}

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

FrameGeometry frame_geometry(const MfccConfig& config, int sample_rate) {
  config.validate();
  if (sample_rate <= 0) throw DataError("mfcc: sample rate must be positive");
  FrameGeometry g;
  g.frame_samples = static_cast<std::size_t>(std::lround(config.frame_length * sample_rate));
  g.hop_samples = static_cast<std::size_t>(std::lround(config.hop * sample_rate));
  if (g.hop_samples == 0 || g.frame_samples <= g.hop_samples) {
    throw ConfigError("mfcc: frame/hop too short for sample rate " + std::to_string(sample_rate));
  }
  g.fft_size = next_power_of_two(std::max(config.fft_size, g.frame_samples));
  return g;
}

Matrix frame_signal(const PcmSignal& signal, const MfccConfig& config) {
  const FrameGeometry g = frame_geometry(config, signal.sample_rate);
  const std::size_t n = signal.samples.size();
  if (n < g.frame_samples) {
    throw DataError("mfcc: signal of " + std::to_string(n) + " samples is shorter than one frame (" +
                    std::to_string(g.frame_samples) + ")");
  }
  std::vector<double> emphasized(n);
  emphasized[0] = signal.samples[0];
  for (std::size_t i = 1; i < n; ++i) {
    emphasized[i] = signal.samples[i] - config.pre_emphasis * signal.samples[i - 1];
  }
  std::vector<double> window(g.frame_samples);
  const double denom = static_cast<double>(g.frame_samples - 1);
  for (std::size_t i = 0; i < g.frame_samples; ++i) {
    window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / denom);
  }
  const std::size_t frames = (n - g.frame_samples) / g.hop_samples + 1;
  Matrix out(frames, g.frame_samples);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * g.hop_samples;
    auto row = out.row(f);
    for (std::size_t i = 0; i < g.frame_samples; ++i) row[i] = emphasized[start + i] * window[i];
  }
  return out;
}

MelFilterbank mel_filterbank(const MfccConfig& config, int sample_rate) {
  const FrameGeometry g = frame_geometry(config, sample_rate);
  const double nyquist = sample_rate / 2.0;
  const double high = config.high_freq.value_or(nyquist);
  if (high > nyquist) throw ConfigError("mfcc: high_freq exceeds Nyquist");
  if (!(high > config.low_freq)) throw ConfigError("mfcc: high_freq must exceed low_freq");

  const auto filters = static_cast<std::size_t>(config.filter_count);
  const double mel_lo = hz_to_mel(config.low_freq);
  const double mel_hi = hz_to_mel(high);
  std::vector<double> edges(filters + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(filters + 1));
  }
  edges.front() = config.low_freq;
  edges.back() = high;

  const std::size_t bins = g.fft_size / 2 + 1;
  MelFilterbank fb{Matrix(filters, bins), {}};
  fb.centers_hz.assign(edges.begin() + 1, edges.end() - 1);
  for (std::size_t m = 0; m < filters; ++m) {
    const double left = edges[m];
    const double center = edges[m + 1];
    const double right = edges[m + 2];
    bool any = false;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(g.fft_size);
      double w = 0.0;
      if (f > left && f <= center) {
        w = (f - left) / (center - left);
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      fb.weights(m, k) = w;
      any = any || w > 0.0;
    }
    if (!any) {
      throw ConfigError("mfcc: filter " + std::to_string(m) + " covers no FFT bin; filter_count " +
                        std::to_string(filters) + " is too large for fft_size " +
                        std::to_string(g.fft_size));
    }
  }
  return fb;
}

void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw ConfigError("fft: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      // Twiddles computed directly rather than by recurrence to avoid drift.
      const std::complex<double> w(std::cos(ang * static_cast<double>(k)),
                                   std::sin(ang * static_cast<double>(k)));
      for (std::size_t i = 0; i < n; i += len) {
        const auto u = a[i + k];
        const auto v = a[i + k + half] * w;
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

std::vector<double> periodogram(std::span<const double> frame, std::size_t fft_size) {
  if (frame.size() > fft_size) throw ConfigError("periodogram: frame longer than fft_size");
  std::vector<std::complex<double>> buf(fft_size);
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
  fft(buf);
  std::vector<double> p(fft_size / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::norm(buf[k]) / static_cast<double>(fft_size);
  return p;
}

std::vector<double> dct2_orthonormal(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> c(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += x[i] * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) /
                           (2.0 * static_cast<double>(n)));
    }
    c[k] = s * std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
  }
  return c;
}

std::vector<double> dct3_orthonormal(std::span<const double> c) {
  const std::size_t n = c.size();
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      s += c[k] * std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n)) *
           std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) /
                    (2.0 * static_cast<double>(n)));
    }
    x[i] = s;
  }
  return x;
}

namespace {

// Regression deltas over +-2 frames with edge clamping.
Matrix deltas(const Matrix& c) {
  const std::size_t frames = c.rows();
  Matrix d(frames, c.cols());
  constexpr double kNorm = 2.0 * (1.0 + 4.0);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t j = 0; j < c.cols(); ++j) {
      double s = 0.0;
      for (std::size_t n = 1; n <= 2; ++n) {
        const std::size_t fwd = std::min(t + n, frames - 1);
        const std::size_t back = t >= n ? t - n : 0;
        s += static_cast<double>(n) * (c(fwd, j) - c(back, j));
      }
      d(t, j) = s / kNorm;
    }
  }
  return d;
}

}  // namespace

DescriptorBag extract_mfcc(const PcmSignal& signal, const MfccConfig& config) {
  const FrameGeometry g = frame_geometry(config, signal.sample_rate);
  const Matrix frames = frame_signal(signal, config);
  const MelFilterbank fb = mel_filterbank(config, signal.sample_rate);
  const auto filters = static_cast<std::size_t>(config.filter_count);
  const auto coeffs = static_cast<std::size_t>(config.coefficient_count);

  Matrix cep(frames.rows(), coeffs);
  std::vector<double> log_energy(filters);
  for (std::size_t f = 0; f < frames.rows(); ++f) {
    const auto power = periodogram(frames.row(f), g.fft_size);
    for (std::size_t m = 0; m < filters; ++m) {
      const double e = dot(fb.weights.row(m), power);
      log_energy[m] = std::log(std::max(e, config.log_floor));
    }
    const auto c = dct2_orthonormal(log_energy);
    std::copy(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(coeffs), cep.row(f).begin());
  }
  if (!config.append_deltas) return DescriptorBag(std::move(cep));

  const Matrix d1 = deltas(cep);
  const Matrix d2 = deltas(d1);
  Matrix full(cep.rows(), coeffs * 3);
  for (std::size_t f = 0; f < cep.rows(); ++f) {
    auto row = full.row(f);
    std::copy(cep.row(f).begin(), cep.row(f).end(), row.begin());
    std::copy(d1.row(f).begin(), d1.row(f).end(), row.begin() + static_cast<std::ptrdiff_t>(coeffs));
    std::copy(d2.row(f).begin(), d2.row(f).end(), row.begin() + static_cast<std::ptrdiff_t>(2 * coeffs));
  }
  return DescriptorBag(std::move(full));
}

}  // namespace veritas
