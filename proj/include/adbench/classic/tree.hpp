#pragma once

#include "adbench/core.hpp"

#include <span>
#include <vector>

namespace adbench::classic {

/// Binary CART classification tree with Gini impurity and no depth limit.
/// Rows of the feature matrix are instances.
class DecisionTree {
 public:
  static DecisionTree fit(const Matrix& features, std::span<const int> labels);

  /// Positive fraction of the leaf reached by `row`.
  template <class Derived>
  double leaf_value(const Eigen::DenseBase<Derived>& row) const {
    int node = 0;
    while (nodes_[std::size_t(node)].feature >= 0) {
      const auto& n = nodes_[std::size_t(node)];
      node = row[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes_[std::size_t(node)].value;
  }

  template <class Derived>
  int vote(const Eigen::DenseBase<Derived>& row) const {
    return label_from_score(leaf_value(row));
  }

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t depth() const;

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    int left = -1, right = -1;
    double value = 0;
  };
  int grow(const Matrix& x, std::span<const int> y, std::vector<int>& idx, std::size_t lo, std::size_t hi);

  std::vector<Node> nodes_;
};

}  // namespace adbench::classic
