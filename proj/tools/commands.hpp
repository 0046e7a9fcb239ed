#pragma once

// Option records and entry points for the sitpose subcommands.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sitpose/ensemble.hpp"
#include "sitpose/features.hpp"
#include "sitpose/learners.hpp"
#include "sitpose/monitor.hpp"
#include "sitpose/synth.hpp"

namespace sitpose::cli {

/// Bad flag values; maps to exit status 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 42;
  bool quiet = false;
};

struct LearnerFlags {
  std::string learners = "dt,svm,mlp";
  std::vector<double> weights;
  std::string mode = "soft";
  bool include_head_xyz = false;

  int dt_min_leaf = 2;
  double dt_confidence = 0.25;
  bool dt_no_prune = false;

  int svm_degree = 3;
  double svm_coef0 = 1.0;
  double svm_c = 1.0;
  double svm_tol = 1e-3;
  double svm_gamma = 0.0;
  std::int64_t svm_max_iter = 10'000'000;
  bool svm_raw = false;

  std::vector<int> mlp_hidden = {200, 100, 25};
  double mlp_lr = 1e-3;
  int mlp_epochs = 200;
  int mlp_batch = 32;
  double mlp_tol = 1e-6;
  int mlp_patience = 10;
  bool mlp_raw = false;

  int gbdt_trees = 25;
  double gbdt_lr = 0.1;
  int gbdt_depth = 3;

  /// Validated specs in flag order; throws UsageError.
  std::vector<LearnerSpec> specs(std::uint64_t seed) const;
  VotingMode voting_mode() const;
  FeatureConfig feature_config() const;
};

struct GenOptions {
  std::size_t per_class = 100;
  std::string out;
  double sigma = 5.0;
  double scale_min = 0.85;
  double scale_max = 1.05;
  std::string camera_side = "left";
  double elevation = 550.0;
  double yaw = 45.0;
  double desk_depth = 720.0;
};

struct FeaturesOptions {
  std::string data;
  std::string out;
  bool include_head_xyz = false;
};

struct TrainOptions {
  std::string data;
  std::string out = "model.bin";
  LearnerFlags learner;
};

struct EvalOptions {
  std::string data;
  std::size_t folds = 5;
  std::string report;
  std::string chart;
  LearnerFlags learner;
};

struct PredictOptions {
  std::string model;
  std::string input;
  bool proba = false;
};

struct MonitorFlags {
  int window = 60;
  double abnormal = 0.75;
  double sedentary_min = 60.0;
  int stand_reset = 120;
  double realert_min = 30.0;
  std::string report;
  std::string csv;

  MonitorConfig config() const;
};

struct MonitorOptions {
  std::string source = "stdin";
  std::string model;
  MonitorFlags flags;
};

struct ReportOptions {
  std::string labels;
  MonitorFlags flags;
};

struct TofDemoOptions {
  double frequency = 10e6;
  double amplitude = 1.0;
  double offset = 0.5;
  int steps = 16;
  double noise = 0.0;
};

int run_gen(const GenOptions& o, const Globals& g);
int run_features(const FeaturesOptions& o, const Globals& g);
int run_train(const TrainOptions& o, const Globals& g);
int run_eval(const EvalOptions& o, const Globals& g);
int run_predict(const PredictOptions& o, const Globals& g);
int run_monitor(const MonitorOptions& o, const Globals& g);
int run_report(const ReportOptions& o, const Globals& g);
int run_tof_demo(const TofDemoOptions& o, const Globals& g);

}  // namespace sitpose::cli
