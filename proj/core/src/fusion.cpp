#include "veritas/fusion.hpp"

#include <cmath>
#include <string>

#include "veritas/error.hpp"
#include "veritas/metrics.hpp"

namespace veritas {

namespace {
constexpr std::array<std::string_view, kModalityCount> kNames = {"motion", "transcript", "audio", "expression"};
constexpr double kTie = 1e-12;
}  // namespace

std::string_view to_string(Modality m) { return kNames[static_cast<std::size_t>(m)]; }

Modality parse_modality(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<Modality>(i);
  }
  throw ConfigError("unknown modality '" + std::string(name) + "'");
}

void FusionWeights::validate(const ModalityMask& enabled) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < kModalityCount; ++i) {
    if (!(alpha[i] >= 0.0) || !std::isfinite(alpha[i])) throw ConfigError("fusion weights must be finite and >= 0");
    if (!enabled[i] && alpha[i] != 0.0) throw ConfigError("fusion weight on a disabled modality must be 0");
    sum += alpha[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("fusion weights must sum to 1");
}

double FusionWeights::entropy() const {
  double h = 0.0;
  for (double a : alpha) {
    if (a > 0.0) h -= a * std::log(a);
  }
  return h;
}

double fuse(const ModalityScores& scores, const FusionWeights& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < kModalityCount; ++i) {
    if (weights.alpha[i] != 0.0) s += weights.alpha[i] * scores[i];
  }
  return s;
}

ScoreStandardizer ScoreStandardizer::fit(std::span<const ModalityScores> rows) {
  ScoreStandardizer st;
  if (rows.empty()) return st;
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < kModalityCount; ++i) st.mean[i] += r[i];
  }
  for (auto& m : st.mean) m /= n;
  ModalityScores var{};
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < kModalityCount; ++i) var[i] += (r[i] - st.mean[i]) * (r[i] - st.mean[i]);
  }
  for (std::size_t i = 0; i < kModalityCount; ++i) {
    const double sd = std::sqrt(var[i] / n);
    st.scale[i] = sd > 0.0 ? sd : 1.0;
  }
  return st;
}

ModalityScores ScoreStandardizer::apply(const ModalityScores& s) const {
  ModalityScores out;
  for (std::size_t i = 0; i < kModalityCount; ++i) out[i] = (s[i] - mean[i]) / scale[i];
  return out;
}

std::vector<FusionWeights> simplex_grid(double step, const ModalityMask& enabled) {
  if (!(step > 0.0) || step > 1.0) throw ConfigError("fusion grid step must be in (0, 1]");
  const double units = 1.0 / step;
  const long n = std::lround(units);
  if (std::abs(units - static_cast<double>(n)) > 1e-9 * units) throw ConfigError("fusion grid step must divide 1");
  std::vector<std::size_t> on;
  for (std::size_t i = 0; i < kModalityCount; ++i) {
    if (enabled[i]) on.push_back(i);
  }
  if (on.empty()) throw ConfigError("fusion grid: no enabled modality");

  std::vector<FusionWeights> grid;
  std::vector<long> parts(on.size(), 0);
  // Enumerate compositions of n into |on| non-negative parts, lexicographically.
  auto rec = [&](auto&& self, std::size_t pos, long left) -> void {
    if (pos + 1 == on.size()) {
      parts[pos] = left;
      FusionWeights w;
      w.alpha = {0.0, 0.0, 0.0, 0.0};
      for (std::size_t j = 0; j < on.size(); ++j) w.alpha[on[j]] = static_cast<double>(parts[j]) / static_cast<double>(n);
      grid.push_back(w);
      return;
    }
    for (long v = 0; v <= left; ++v) {
      parts[pos] = v;
      self(self, pos + 1, left - v);
    }
  };
  rec(rec, 0, n);
  return grid;
}

WeightSearchResult search_weights_detailed(std::span<const ModalityScores> scores, std::span<const int> labels,
                                           double step, const ModalityMask& enabled) {
  if (scores.size() != labels.size()) throw DimensionError("search_weights: score count != label count");
  const auto grid = simplex_grid(step, enabled);
  WeightSearchResult best;
  best.grid_size = grid.size();
  best.auc = -1.0;
  std::vector<double> fused(scores.size());
  for (const auto& w : grid) {
    for (std::size_t i = 0; i < scores.size(); ++i) fused[i] = fuse(scores[i], w);
    const double a = auc_pr(fused, labels);
    bool take = false;
    if (a > best.auc + kTie) {
      take = true;
    } else if (std::abs(a - best.auc) <= kTie) {
      const double h = w.entropy(), hb = best.weights.entropy();
      if (h > hb + kTie) take = true;
      else if (std::abs(h - hb) <= kTie && w.alpha < best.weights.alpha) take = true;
    }
    if (take) {
      best.weights = w;
      best.auc = a;
    }
  }
  return best;
}

FusionWeights search_weights(std::span<const ModalityScores> scores, std::span<const int> labels, double step,
                             const ModalityMask& enabled) {
  return search_weights_detailed(scores, labels, step, enabled).weights;
}

}  // namespace veritas
