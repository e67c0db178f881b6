#include "adbench/classic/tree.hpp"

#include <algorithm>
#include <functional>

namespace adbench::classic {

namespace {
double gini(double pos, double n) {
  if (n == 0) return 0;
  const double p = pos / n;
  return 2.0 * p * (1.0 - p);
}
}  // namespace

DecisionTree DecisionTree::fit(const Matrix& features, std::span<const int> labels) {
  if (features.rows() == 0 || std::size_t(features.rows()) != labels.size())
    throw DimensionError("DecisionTree: feature rows and labels disagree");
  DecisionTree tree;
  std::vector<int> idx(labels.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = int(i);
  tree.grow(features, labels, idx, 0, idx.size());
  return tree;
}

int DecisionTree::grow(const Matrix& x, std::span<const int> y, std::vector<int>& idx, std::size_t lo,
                       std::size_t hi) {
  const int id = int(nodes_.size());
  nodes_.emplace_back();
  const double n = double(hi - lo);
  double pos = 0;
  for (std::size_t i = lo; i < hi; ++i) pos += y[std::size_t(idx[i])];
  nodes_[std::size_t(id)].value = pos / n;
  if (pos == 0 || pos == n) return id;

  const double parent = gini(pos, n);
  double best_gain = 1e-12;
  int best_feature = -1;
  double best_threshold = 0;
  std::vector<std::pair<double, int>> col(hi - lo);
  for (Index f = 0; f < x.cols(); ++f) {
    for (std::size_t i = lo; i < hi; ++i) col[i - lo] = {x(idx[i], f), y[std::size_t(idx[i])]};
    std::sort(col.begin(), col.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    double left_pos = 0;
    for (std::size_t k = 1; k < col.size(); ++k) {
      left_pos += col[k - 1].second;
      if (col[k].first <= col[k - 1].first) continue;
      const double nl = double(k), nr = n - nl;
      const double child = (nl * gini(left_pos, nl) + nr * gini(pos - left_pos, nr)) / n;
      const double gain = parent - child;
      if (gain > best_gain) {
        best_gain = gain;
        best_feature = int(f);
        best_threshold = col[k - 1].first + (col[k].first - col[k - 1].first) / 2.0;
        // Midpoint may round up to the right value for adjacent doubles.
        if (best_threshold >= col[k].first) best_threshold = col[k - 1].first;
      }
    }
  }
  if (best_feature < 0) return id;

  const auto mid = std::stable_partition(idx.begin() + long(lo), idx.begin() + long(hi),
                                         [&](int i) { return x(i, best_feature) <= best_threshold; });
  const auto split = std::size_t(mid - idx.begin());
  const int left = grow(x, y, idx, lo, split);
  const int right = grow(x, y, idx, split, hi);
  auto& node = nodes_[std::size_t(id)];
  node.feature = best_feature;
  node.threshold = best_threshold;
  node.left = left;
  node.right = right;
  return id;
}

std::size_t DecisionTree::depth() const {
  std::function<std::size_t(int)> rec = [&](int node) -> std::size_t {
    const auto& n = nodes_[std::size_t(node)];
    if (n.feature < 0) return 0;
    return 1 + std::max(rec(n.left), rec(n.right));
  };
  return nodes_.empty() ? 0 : rec(0);
}

}  // namespace adbench::classic
