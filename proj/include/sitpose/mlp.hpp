#pragma once

// Fully connected rectifier network with a softmax output, trained by
// mini-batch cross-entropy and Adam.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sitpose/matrix.hpp"

namespace sitpose {

struct MlpParams {
  std::vector<int> hidden = {200, 100, 25};
  double learning_rate = 1e-3;
  int max_epochs = 200;
  int batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double tol = 1e-6;   // minimal epoch-loss improvement
  int patience = 10;   // epochs without improvement before stopping
  bool standardize = true;  // z-score features before the first layer

  void validate() const;
};

/// weights[l] is (out x in) row-major, biases[l] has `out` entries.
struct MlpModel {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., output
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
  FeatureScaler scaler;  // applied to inputs before the first layer

  std::size_t num_classes() const { return layer_sizes.empty() ? 0 : layer_sizes.back(); }
  std::size_t parameter_count() const;
  std::vector<double> predict_proba(std::span<const double> x) const;

  /// Zero-initialized network of the given shape.
  static MlpModel zeros(std::vector<std::size_t> layer_sizes);

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

/// Mean cross-entropy and its gradient, laid out like the model.
struct MlpGradient {
  double loss = 0.0;
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

MlpGradient mlp_loss_and_gradient(const MlpModel& model, const Matrix& x, std::span<const int> y);

/// Glorot-uniform weights, zero biases.
MlpModel init_mlp(std::vector<std::size_t> layer_sizes, std::uint64_t seed);

struct MlpTrainingLog {
  std::vector<double> epoch_loss;
};

/// Throws TrainingError("diverged at epoch N") on a non-finite loss.
MlpModel train_mlp(const Matrix& x, std::span<const int> y, std::size_t num_classes,
                   const MlpParams& params, std::uint64_t seed, MlpTrainingLog* log = nullptr);

}  // namespace sitpose
