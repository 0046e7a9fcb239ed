#pragma once

// Support vector classification with a polynomial kernel. Binary problems
// are solved by sequential minimal optimization; multi-class problems use
// one-vs-one machines whose decision values are calibrated by Platt scaling
// and combined by pairwise coupling.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sitpose/matrix.hpp"

namespace sitpose {

struct SvmParams {
  int degree = 3;
  double coef0 = 1.0;
  double c_penalty = 1.0;
  double tol = 1e-3;                   // maximal KKT violation at convergence
  std::int64_t max_iterations = 10'000'000;
  double gamma = 0.0;                  // 0 selects 1 / feature_dim
  double cache_mb = 256.0;             // kernel row cache
  bool standardize = true;             // z-score features before the kernel

  void validate() const;
};

/// K(a, b) = (gamma * a.b + coef0)^degree.
struct PolynomialKernel {
  double gamma = 1.0;
  double coef0 = 1.0;
  int degree = 3;

  double operator()(std::span<const double> a, std::span<const double> b) const;
  friend bool operator==(const PolynomialKernel&, const PolynomialKernel&) = default;
};

struct BinarySvmSolution {
  std::vector<double> alpha;  // one per training row, in [0, C]
  double rho = 0.0;           // decision(x) = sum_i alpha_i y_i K(x_i, x) - rho
  std::int64_t iterations = 0;
  double kkt_violation = 0.0;
};

/// Solves the C-SVC dual for labels in {-1, +1}. Throws TrainingError with
/// the worst KKT violation when max_iterations is exhausted.
BinarySvmSolution solve_binary_svm(const Matrix& x, std::span<const int> y_signed,
                                   const PolynomialKernel& kernel, const SvmParams& params);

/// Sigmoid 1 / (1 + exp(a * f + b)) mapping a decision value to P(y = +1).
struct PlattSigmoid {
  double a = 0.0;
  double b = 0.0;

  double operator()(double decision) const;
  friend bool operator==(const PlattSigmoid&, const PlattSigmoid&) = default;
};

/// Fits the sigmoid by regularized maximum likelihood with Newton steps and
/// backtracking line search.
PlattSigmoid fit_platt(std::span<const double> decision_values, std::span<const int> y_signed);

/// Combines pairwise estimates r(i, j) = P(i | i or j) into a distribution
/// over k classes. `pairwise` is k x k, diagonal ignored.
std::vector<double> couple_pairwise(const Matrix& pairwise);

struct SvmPairMachine {
  int positive_class = 0;  // decision > 0 votes for this class
  int negative_class = 0;
  std::vector<std::uint32_t> sv_index;  // into SvmModel::support_vectors
  std::vector<double> coef;             // alpha_i * y_i
  double rho = 0.0;
  PlattSigmoid sigmoid;

  friend bool operator==(const SvmPairMachine&, const SvmPairMachine&) = default;
};

struct SvmModel {
  PolynomialKernel kernel;
  FeatureScaler scaler;  // applied to inputs before the kernel
  std::size_t num_classes = 0;
  Matrix support_vectors;
  std::vector<SvmPairMachine> machines;
  /// Classes seen in training; absent classes receive probability zero.
  std::vector<int> present_classes;

  std::vector<double> decision_values(std::span<const double> x) const;
  std::vector<double> predict_proba(std::span<const double> x) const;

  friend bool operator==(const SvmModel&, const SvmModel&) = default;
};

SvmModel train_svm(const Matrix& x, std::span<const int> y, std::size_t num_classes,
                   const SvmParams& params);

}  // namespace sitpose
