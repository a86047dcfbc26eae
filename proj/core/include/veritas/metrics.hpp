#pragma once

#include <span>

namespace veritas {

// Average precision. Rows are ranked by descending score; tied scores form a
// single threshold, so precision and recall are read after the whole group:
//   AP = sum over groups of (new positives / P) * precision after group.
// Throws DegenerateDataError unless both classes are present.
double auc_pr(std::span<const double> scores, std::span<const int> labels);

}  // namespace veritas
