#pragma once

// C4.5-style classification tree over continuous features: binary threshold
// splits ranked by gain ratio, followed by error-based (pessimistic) pruning.

#include <cstddef>
#include <span>
#include <vector>

#include "sitpose/matrix.hpp"

namespace sitpose {

struct DecisionTreeParams {
  int min_leaf = 2;          // minimum rows on each side of a split
  double confidence = 0.25;  // pruning confidence level, in (0, 1)
  bool prune = true;

  void validate() const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // rows with x[feature] <= threshold go left
  int left = -1;
  int right = -1;
  std::vector<double> class_counts;  // training rows reaching this node

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::size_t num_classes = 0;

  /// Index of the leaf reached by `x`.
  std::size_t leaf_for(std::span<const double> x) const;
  /// Laplace-smoothed leaf frequencies (count + 1) / (n + K).
  std::vector<double> predict_proba(std::span<const double> x) const;
  std::size_t depth() const;
  std::size_t leaf_count() const;

  friend bool operator==(const DecisionTreeModel&, const DecisionTreeModel&) = default;
};

/// Entropy bookkeeping for one binary split.
struct SplitScore {
  double gain = 0.0;
  double split_info = 0.0;
  double gain_ratio = 0.0;
};

/// Information gain, split information and their ratio for a binary split
/// with the given per-class counts on each side (log base 2).
SplitScore score_split(std::span<const double> left_counts, std::span<const double> right_counts);

/// Entropy in bits of a class-count vector.
double entropy(std::span<const double> counts);

/// Upper-confidence-limit error allowance added to `errors` observed among
/// `n` rows at confidence `cf` (the classical C4.5 estimate).
double pessimistic_extra_errors(double n, double errors, double cf);

DecisionTreeModel train_decision_tree(const Matrix& x, std::span<const int> y,
                                      std::size_t num_classes, const DecisionTreeParams& params);

}  // namespace sitpose
