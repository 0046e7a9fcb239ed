#pragma once

// Uniform train / predict-probability interface over the four base
// classifiers, plus the versioned binary model file.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sitpose/decision_tree.hpp"
#include "sitpose/gbdt.hpp"
#include "sitpose/matrix.hpp"
#include "sitpose/mlp.hpp"
#include "sitpose/svm.hpp"

namespace sitpose {

enum class LearnerKind : std::uint8_t { DecisionTree = 1, Svm = 2, Mlp = 3, Gbdt = 4 };

/// "dt", "svm", "mlp", "gbdt".
std::string_view learner_short_name(LearnerKind kind);
std::optional<LearnerKind> parse_learner_kind(std::string_view name);

using Hyperparameters = std::variant<DecisionTreeParams, SvmParams, MlpParams, GbdtParams>;

struct LearnerSpec {
  Hyperparameters params = DecisionTreeParams{};
  std::uint64_t seed = 42;

  LearnerKind kind() const;
  void validate() const;

  /// Spec with default hyperparameters for `kind`.
  static LearnerSpec defaults(LearnerKind kind, std::uint64_t seed = 42);
};

using ModelParameters = std::variant<DecisionTreeModel, SvmModel, MlpModel, GbdtModel>;

class TrainedModel {
 public:
  TrainedModel(LearnerSpec spec, std::size_t feature_dim, std::size_t num_classes,
               ModelParameters parameters);

  const LearnerSpec& spec() const { return spec_; }
  LearnerKind kind() const { return spec_.kind(); }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t num_classes() const { return num_classes_; }
  /// Class codes 0..K-1 in output order.
  std::vector<int> class_list() const;
  const ModelParameters& parameters() const { return parameters_; }

  /// Throws InvalidArgument on a dimension mismatch. Output is non-negative
  /// and sums to one.
  std::vector<double> predict_proba(std::span<const double> x) const;
  /// Argmax of predict_proba, ties to the lowest class code.
  int predict(std::span<const double> x) const;

 private:
  LearnerSpec spec_;
  std::size_t feature_dim_;
  std::size_t num_classes_;
  ModelParameters parameters_;
};

/// Optional diagnostics filled by the iterative trainers.
struct TrainingLog {
  std::vector<double> losses;  // MLP epoch loss or GBDT round loss
};

/// Labels are class codes in [0, num_classes).
TrainedModel train_model(const LearnerSpec& spec, const Matrix& x, std::span<const int> y,
                         std::size_t num_classes, TrainingLog* log = nullptr);

/// Index of the largest entry, ties to the lowest index.
std::size_t argmax(std::span<const double> values);

// Model file: "SITPOSE1", u16 format_version, u8 kind tag, then the body,
// then a CRC-32 of everything before it. Integers little-endian, reals as
// IEEE-754 bit patterns.
inline constexpr std::uint16_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const TrainedModel& model);
/// Throws ModelFormatError ("not a sitpose model", version, truncation,
/// checksum).
TrainedModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace sitpose
