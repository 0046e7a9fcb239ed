#pragma once

// Soft (probability-averaging) and hard (plurality) voting over trained
// base learners.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sitpose/learners.hpp"

namespace sitpose {

enum class VotingMode : std::uint8_t { Soft = 0, Hard = 1 };

struct SoftVote {
  int label = 0;
  std::vector<double> probabilities;
};

/// Weighted mean of probability vectors; argmax ties go to the lowest code.
SoftVote soft_vote(std::span<const std::vector<double>> member_probs, std::span<const double> weights);

/// Weighted plurality of member argmaxes over `num_classes` classes; ties go
/// to the lowest code.
int hard_vote(std::span<const int> member_labels, std::span<const double> weights,
              std::size_t num_classes);

class TrainedEnsemble {
 public:
  /// Throws InvalidArgument unless there are >= 2 members sharing class list
  /// and feature dimension, weights are non-negative and sum to > 0.
  TrainedEnsemble(std::vector<TrainedModel> members, std::vector<double> weights,
                  VotingMode mode = VotingMode::Soft);

  const std::vector<TrainedModel>& members() const { return members_; }
  const std::vector<double>& weights() const { return weights_; }
  VotingMode mode() const { return mode_; }
  std::size_t feature_dim() const { return members_.front().feature_dim(); }
  std::size_t num_classes() const { return members_.front().num_classes(); }

  SoftVote vote_soft(std::span<const double> x) const;
  int vote_hard(std::span<const double> x) const;
  /// Label under the configured mode.
  int predict(std::span<const double> x) const;

 private:
  std::vector<TrainedModel> members_;
  std::vector<double> weights_;
  VotingMode mode_;
};

/// Trains every member on the same data; uniform weights when `weights` is
/// empty.
TrainedEnsemble train_ensemble(std::span<const LearnerSpec> specs, const Matrix& x,
                               std::span<const int> y, std::size_t num_classes,
                               std::vector<double> weights = {},
                               VotingMode mode = VotingMode::Soft);

// Ensemble file: "SITPOSE1", u16 version, tag 16, u8 mode, member count,
// then per member its weight and the length-prefixed member model file, then
// a CRC-32 of everything before it.
std::vector<std::uint8_t> serialize_ensemble(const TrainedEnsemble& ensemble);
TrainedEnsemble deserialize_ensemble(std::span<const std::uint8_t> bytes);
void save_ensemble(const TrainedEnsemble& ensemble, const std::filesystem::path& path);
TrainedEnsemble load_ensemble(const std::filesystem::path& path);

/// True when the file carries the ensemble tag (after magic/version checks).
bool is_ensemble_file(std::span<const std::uint8_t> bytes);

}  // namespace sitpose
