#pragma once

// Confusion matrices, precision / recall / support-weighted F1, and
// stratified k-fold cross-validation of a voting ensemble and its members.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sitpose/ensemble.hpp"
#include "sitpose/features.hpp"
#include "sitpose/learners.hpp"
#include "sitpose/skeleton.hpp"

namespace sitpose {

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes = 0)
      : k_(num_classes), counts_(num_classes * num_classes, 0) {}

  std::size_t num_classes() const { return k_; }
  std::uint64_t operator()(std::size_t truth, std::size_t pred) const { return counts_[truth * k_ + pred]; }
  std::uint64_t& operator()(std::size_t truth, std::size_t pred) { return counts_[truth * k_ + pred]; }
  std::uint64_t support(std::size_t truth) const;
  std::uint64_t total() const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

/// Throws InvalidArgument on length mismatch, empty input or codes outside
/// [0, num_classes).
ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::size_t num_classes);

struct MetricReport {
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<double> support;  // averaged reports carry mean supports
  double weighted_f1 = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double accuracy = 0.0;
};

/// Per-class precision TP/(TP+FP), recall TP/(TP+FN), F1 = 2PR/(P+R) with
/// every 0/0 taken as 0, and support-weighted averages.
MetricReport metrics(const ConfusionMatrix& cm);

/// Field-wise unweighted mean.
MetricReport mean_report(std::span<const MetricReport> reports);

/// Fold index per row: rows of each class are shuffled with `seed` and dealt
/// round-robin, continuing the rotation across classes. Throws
/// InvalidArgument naming any class with fewer than k rows.
std::vector<int> stratified_folds(std::span<const int> labels, std::size_t num_classes,
                                  std::size_t k, std::uint64_t seed);

struct CrossValidationConfig {
  std::vector<LearnerSpec> learners;
  std::vector<double> weights;  // empty: uniform
  VotingMode mode = VotingMode::Soft;
  std::size_t folds = 5;
  std::uint64_t seed = 42;
  FeatureConfig features;
  bool parallel = true;  // folds on separate threads when cores allow
};

struct FoldResult {
  std::size_t train_rows = 0;
  std::vector<std::size_t> test_rows;  // dataset indices
  ConfusionMatrix ensemble_confusion;
  MetricReport ensemble;
  std::vector<ConfusionMatrix> member_confusion;
  std::vector<MetricReport> members;
};

struct CrossValidationResult {
  std::vector<std::string> member_names;
  std::vector<FoldResult> folds;
  MetricReport ensemble_mean;
  std::vector<MetricReport> member_means;
  ConfusionMatrix ensemble_confusion;  // summed over folds
  std::vector<ConfusionMatrix> member_confusion;
};

/// A single learner is evaluated on its own (the "ensemble" entries then
/// describe that learner).
CrossValidationResult cross_validate(const Dataset& dataset, const CrossValidationConfig& config);

/// Structured text: per-fold and mean metrics and the summed confusion
/// matrices as integer tables.
std::string render_cv_report(const CrossValidationResult& result);
/// `model,class,precision,recall,f1` rows with a `weighted` row per model.
std::string render_cv_chart_csv(const CrossValidationResult& result);

}  // namespace sitpose
