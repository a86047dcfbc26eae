#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "veritas/error.hpp"
#include "veritas/models.hpp"
#include "veritas/random.hpp"

namespace veritas {

PresortedColumns::PresortedColumns(const Matrix& x) : order(x.cols()) {
  const auto n = static_cast<std::uint32_t>(x.rows());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    auto& o = order[f];
    o.resize(n);
    std::iota(o.begin(), o.end(), 0u);
    std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
  }
}

double DecisionTree::predict(std::span<const double> x) const {
  int at = 0;
  while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const auto& nd = nodes[static_cast<std::size_t>(at)];
    at = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<std::size_t>(at)].value;
}

int DecisionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const int> y, std::span<const double> w, const TreeOptions& opt,
              const PresortedColumns& pre)
      : x_(x), y_(y), w_(w), opt_(opt), pre_(pre), marker_(x.rows(), -1), rng_(opt.seed) {
    features_.resize(x.cols());
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  DecisionTree build() {
    std::vector<std::uint32_t> rows;
    for (std::uint32_t i = 0; i < x_.rows(); ++i) {
      if (w_[i] > 0.0) rows.push_back(i);
    }
    if (rows.empty()) throw DegenerateDataError("tree: no rows with positive weight");
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = std::numeric_limits<double>::infinity();
  };

  int grow(const std::vector<std::uint32_t>& rows, int depth) {
    double wsum = 0.0, wpos = 0.0;
    for (auto r : rows) {
      wsum += w_[r];
      if (y_[r] == 1) wpos += w_[r];
    }
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{-1, 0.0, -1, -1, wpos / wsum});

    const bool pure = wpos <= 0.0 || wpos >= wsum;
    if (pure || static_cast<int>(rows.size()) < opt_.min_samples_split ||
        (opt_.max_depth > 0 && depth >= opt_.max_depth)) {
      return id;
    }
    for (auto r : rows) marker_[r] = id;
    const Split best = find_split(id, wsum, wpos);
    if (best.feature < 0) return id;

    std::vector<std::uint32_t> left, right;
    for (auto r : rows) {
      (x_(r, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(r);
    }
    tree_.nodes[static_cast<std::size_t>(id)].feature = best.feature;
    tree_.nodes[static_cast<std::size_t>(id)].threshold = best.threshold;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    tree_.nodes[static_cast<std::size_t>(id)].left = l;
    tree_.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  Split find_split(int id, double wsum, double wpos) {
    const bool sampled = opt_.max_features > 0 && static_cast<std::size_t>(opt_.max_features) < features_.size();
    if (sampled) rng_.shuffle(features_);
    Split best;
    int examined = 0;
    for (std::size_t f : features_) {
      if (sampled && examined >= opt_.max_features) break;
      if (scan_feature(f, id, wsum, wpos, best)) ++examined;
    }
    return best;
  }

  // Returns false when the feature is constant within the node.
  bool scan_feature(std::size_t f, int id, double wsum, double wpos, Split& best) const {
    double wl = 0.0, pl = 0.0;
    double prev = 0.0;
    bool have_prev = false;
    bool varied = false;
    for (auto r : pre_.order[f]) {
      if (marker_[r] != id) continue;
      const double v = x_(r, f);
      if (have_prev && v > prev) {
        varied = true;
        const double wr = wsum - wl;
        const double pr = wpos - pl;
        const double imp = 2.0 * (pl * (wl - pl) / wl + pr * (wr - pr) / wr);
        if (imp < best.impurity) {
          double thr = 0.5 * (prev + v);
          if (!(thr < v)) thr = prev;
          best = Split{static_cast<int>(f), thr, imp};
        }
      }
      wl += w_[r];
      if (y_[r] == 1) pl += w_[r];
      prev = v;
      have_prev = true;
    }
    return varied;
  }

  const Matrix& x_;
  std::span<const int> y_;
  std::span<const double> w_;
  const TreeOptions& opt_;
  const PresortedColumns& pre_;
  std::vector<int> marker_;
  std::vector<std::size_t> features_;
  Rng rng_;
  DecisionTree tree_;
};

}  // namespace

DecisionTree grow_tree(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                       const TreeOptions& options, const PresortedColumns* presorted) {
  if (y.size() != x.rows() || weights.size() != x.rows()) {
    throw DimensionError("tree: labels/weights do not match row count");
  }
  if (options.min_samples_split < 2) throw ConfigError("tree: min_samples_split must be >= 2");
  if (presorted) return TreeBuilder(x, y, weights, options, *presorted).build();
  const PresortedColumns local(x);
  return TreeBuilder(x, y, weights, options, local).build();
}

}  // namespace veritas
