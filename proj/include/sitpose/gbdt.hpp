#pragma once

// Multi-class gradient boosting: each round fits one regression tree per
// class to the softmax cross-entropy residuals, with Newton leaf values.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sitpose/matrix.hpp"

namespace sitpose {

struct GbdtParams {
  int n_trees = 25;
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_leaf = 1;

  void validate() const;
};

struct RegressionNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const RegressionNode&, const RegressionNode&) = default;
};

struct RegressionTree {
  std::vector<RegressionNode> nodes;

  double predict(std::span<const double> x) const;
  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct GbdtModel {
  std::size_t num_classes = 0;
  double learning_rate = 0.1;
  std::vector<double> initial_scores;          // log class priors
  std::vector<std::vector<RegressionTree>> rounds;  // rounds x classes

  /// Raw scores after the first `n_rounds` rounds (all when omitted).
  std::vector<double> staged_scores(std::span<const double> x, std::size_t n_rounds) const;
  std::vector<double> staged_proba(std::span<const double> x, std::size_t n_rounds) const;
  std::vector<double> predict_proba(std::span<const double> x) const;

  friend bool operator==(const GbdtModel&, const GbdtModel&) = default;
};

struct GbdtTrainingLog {
  std::vector<double> round_loss;  // training log-loss after each round
};

GbdtModel train_gbdt(const Matrix& x, std::span<const int> y, std::size_t num_classes,
                     const GbdtParams& params, std::uint64_t seed,
                     GbdtTrainingLog* log = nullptr);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> scores);

}  // namespace sitpose
