#include "veritas/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "veritas/error.hpp"

namespace veritas {

double auc_pr(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DimensionError("auc_pr: score count != label count");
  std::size_t positives = 0;
  for (int l : labels) positives += l == 1 ? 1 : 0;
  if (positives == 0 || positives == labels.size()) throw DegenerateDataError("auc_pr: single-class labels");
  for (double s : scores) {
    if (std::isnan(s)) throw DataError("auc_pr: NaN score");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const double p = static_cast<double>(positives);
  std::size_t tp = 0, seen = 0;
  double ap = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t group_tp = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      group_tp += labels[order[j]] == 1 ? 1 : 0;
      ++j;
    }
    tp += group_tp;
    seen += j - i;
    if (group_tp > 0) {
      ap += (static_cast<double>(group_tp) / p) * (static_cast<double>(tp) / static_cast<double>(seen));
    }
    i = j;
  }
  return ap;
}

}  // namespace veritas
