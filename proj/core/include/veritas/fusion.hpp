#pragma once

// Convex late fusion of the four per-modality scores.

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace veritas {

enum class Modality { kMotion = 0, kTranscript = 1, kAudio = 2, kExpression = 3 };
inline constexpr std::size_t kModalityCount = 4;
inline constexpr std::array<Modality, kModalityCount> kAllModalities = {
    Modality::kMotion, Modality::kTranscript, Modality::kAudio, Modality::kExpression};

std::string_view to_string(Modality m);
Modality parse_modality(std::string_view name);  // ConfigError on unknown names

using ModalityScores = std::array<double, kModalityCount>;
using ModalityMask = std::array<bool, kModalityCount>;
inline constexpr ModalityMask kAllEnabled = {true, true, true, true};

struct FusionWeights {
  // motion, transcript, audio, expression
  std::array<double, kModalityCount> alpha{0.25, 0.25, 0.25, 0.25};

  // Non-negative, zero on disabled modalities, summing to 1 within 1e-9.
  void validate(const ModalityMask& enabled = kAllEnabled) const;
  double entropy() const;
  friend bool operator==(const FusionWeights&, const FusionWeights&) = default;
};

double fuse(const ModalityScores& scores, const FusionWeights& weights);

// Per-modality zero-mean / unit-variance map. Constant modalities are only centred.
struct ScoreStandardizer {
  ModalityScores mean{};
  ModalityScores scale{1.0, 1.0, 1.0, 1.0};

  static ScoreStandardizer fit(std::span<const ModalityScores> rows);
  ModalityScores apply(const ModalityScores& s) const;
};

// Every weight vector on the simplex whose entries are multiples of `step`,
// restricted to enabled modalities. `step` must divide 1; a step above 1
// gives an empty grid and throws ConfigError.
std::vector<FusionWeights> simplex_grid(double step, const ModalityMask& enabled = kAllEnabled);

struct WeightSearchResult {
  FusionWeights weights;
  double auc = 0.0;
  std::size_t grid_size = 0;
};

// Exhaustive search for the weights with the highest AUC-PR on the given
// (already standardized) scores. Ties within 1e-12 go to the highest-entropy
// vector, then the lexicographically smallest.
WeightSearchResult search_weights_detailed(std::span<const ModalityScores> scores, std::span<const int> labels,
                                           double step = 0.05, const ModalityMask& enabled = kAllEnabled);
FusionWeights search_weights(std::span<const ModalityScores> scores, std::span<const int> labels, double step = 0.05,
                             const ModalityMask& enabled = kAllEnabled);

}  // namespace veritas
