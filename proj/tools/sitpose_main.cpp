// sitpose: data generation, training, evaluation, prediction and session
// monitoring from the command line.

#include <CLI11.hpp>

#include <exception>
#include <iostream>

#include "commands.hpp"
#include "sitpose/error.hpp"

namespace {

using namespace sitpose::cli;

void add_learner_flags(CLI::App* cmd, LearnerFlags& f, const std::string& learners_flag) {
  cmd->add_option(learners_flag, f.learners, "Comma-separated learners: dt, svm, mlp, gbdt")
      ->capture_default_str();
  cmd->add_option("--weights", f.weights, "Voting weight per learner")->delimiter(',');
  cmd->add_option("--mode", f.mode, "Voting mode")->check(CLI::IsMember({"soft", "hard"}))->capture_default_str();
  cmd->add_flag("--include-head-xyz", f.include_head_xyz, "Append head x and y to the features");

  cmd->add_option("--dt-min-leaf", f.dt_min_leaf)->capture_default_str();
  cmd->add_option("--dt-confidence", f.dt_confidence, "Pruning confidence level")->capture_default_str();
  cmd->add_flag("--dt-no-prune", f.dt_no_prune);

  cmd->add_option("--svm-degree", f.svm_degree)->capture_default_str();
  cmd->add_option("--svm-coef0", f.svm_coef0)->capture_default_str();
  cmd->add_option("--svm-c", f.svm_c)->capture_default_str();
  cmd->add_option("--svm-tol", f.svm_tol)->capture_default_str();
  cmd->add_option("--svm-gamma", f.svm_gamma, "0 selects 1/feature_dim")->capture_default_str();
  cmd->add_option("--svm-max-iter", f.svm_max_iter)->capture_default_str();
  cmd->add_flag("--svm-raw", f.svm_raw, "Feed unscaled features to the SVM");

  cmd->add_option("--mlp-hidden", f.mlp_hidden, "Hidden layer widths")->delimiter(',');
  cmd->add_option("--mlp-lr", f.mlp_lr)->capture_default_str();
  cmd->add_option("--mlp-epochs", f.mlp_epochs)->capture_default_str();
  cmd->add_option("--mlp-batch", f.mlp_batch)->capture_default_str();
  cmd->add_option("--mlp-tol", f.mlp_tol)->capture_default_str();
  cmd->add_option("--mlp-patience", f.mlp_patience)->capture_default_str();
  cmd->add_flag("--mlp-raw", f.mlp_raw, "Feed unscaled features to the MLP");

  cmd->add_option("--gbdt-trees", f.gbdt_trees)->capture_default_str();
  cmd->add_option("--gbdt-lr", f.gbdt_lr)->capture_default_str();
  cmd->add_option("--gbdt-depth", f.gbdt_depth)->capture_default_str();
}

void add_monitor_flags(CLI::App* cmd, MonitorFlags& f) {
  cmd->add_option("--window", f.window, "Posture window in seconds")->capture_default_str();
  cmd->add_option("--abnormal", f.abnormal, "Incorrect fraction that must be exceeded")->capture_default_str();
  cmd->add_option("--sedentary-min", f.sedentary_min, "Cumulative sitting minutes before an alert")
      ->capture_default_str();
  cmd->add_option("--stand-reset", f.stand_reset, "Standing seconds that end a sitting bout")
      ->capture_default_str();
  cmd->add_option("--realert-min", f.realert_min, "Minutes between repeated sedentary alerts")
      ->capture_default_str();
  cmd->add_option("--report", f.report, "Write the session report here instead of stdout");
  cmd->add_option("--csv", f.csv, "Write per-class bar-chart data here");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sitting posture classification and session monitoring"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  app.set_config("--config", "", "key=value configuration file; flags override it");

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_flag("--quiet,-q", g.quiet, "Suppress progress messages");

  GenOptions gen;
  auto* c_gen = app.add_subcommand("gen", "Generate a synthetic labeled skeleton dataset");
  c_gen->add_option("--per-class", gen.per_class, "Frames per posture")->capture_default_str();
  c_gen->add_option("--out", gen.out, "Output dataset CSV")->required();
  c_gen->add_option("--sigma", gen.sigma, "Joint jitter in mm")->capture_default_str();
  c_gen->add_option("--scale-min", gen.scale_min)->capture_default_str();
  c_gen->add_option("--scale-max", gen.scale_max)->capture_default_str();
  c_gen->add_option("--camera-side", gen.camera_side)->check(CLI::IsMember({"left", "right"}))->capture_default_str();
  c_gen->add_option("--elevation", gen.elevation, "Camera height above the pelvis in mm")->capture_default_str();
  c_gen->add_option("--yaw", gen.yaw, "Camera yaw in degrees")->capture_default_str();
  c_gen->add_option("--desk-depth", gen.desk_depth, "mm")->capture_default_str();

  FeaturesOptions feat;
  auto* c_feat = app.add_subcommand("features", "Extract joint-angle features to CSV");
  c_feat->add_option("--data", feat.data, "Dataset CSV")->required();
  c_feat->add_option("--out", feat.out, "Feature CSV")->required();
  c_feat->add_flag("--include-head-xyz", feat.include_head_xyz);

  TrainOptions train;
  auto* c_train = app.add_subcommand("train", "Train a model or a voting ensemble");
  c_train->add_option("--data", train.data, "Dataset CSV")->required();
  c_train->add_option("--out", train.out, "Model file")->capture_default_str();
  add_learner_flags(c_train, train.learner, "--learners");

  EvalOptions eval;
  auto* c_eval = app.add_subcommand("eval", "Stratified k-fold cross-validation");
  c_eval->add_option("--data", eval.data, "Dataset CSV")->required();
  c_eval->add_option("--folds", eval.folds)->capture_default_str();
  c_eval->add_option("--report", eval.report, "Report file (stdout when omitted)");
  c_eval->add_option("--chart", eval.chart, "Per-class metrics CSV");
  add_learner_flags(c_eval, eval.learner, "--model-spec,--learners");

  PredictOptions pred;
  auto* c_pred = app.add_subcommand("predict", "Classify skeleton rows");
  c_pred->add_option("--model", pred.model, "Model or ensemble file")->required();
  c_pred->add_option("--input", pred.input, "Dataset CSV or stream-format lines")->required();
  c_pred->add_flag("--proba", pred.proba, "Also print class probabilities");

  MonitorOptions mon;
  auto* c_mon = app.add_subcommand("monitor", "Run the live session monitor");
  c_mon->add_option("--source", mon.source, "stdin, tcp:PORT or replay:FILE")->capture_default_str();
  c_mon->add_option("--model", mon.model, "Model or ensemble file")->required();
  add_monitor_flags(c_mon, mon.flags);

  ReportOptions rep;
  auto* c_rep = app.add_subcommand("report", "Session report from a 1 Hz label file");
  c_rep->add_option("--labels", rep.labels, "One posture label per line")->required();
  add_monitor_flags(c_rep, rep.flags);

  TofDemoOptions tofd;
  auto* c_tof = app.add_subcommand("tof-demo", "Print a four-phase ToF phase/depth table");
  c_tof->add_option("--frequency", tofd.frequency, "Modulation frequency in Hz")->capture_default_str();
  c_tof->add_option("--amplitude", tofd.amplitude)->capture_default_str();
  c_tof->add_option("--offset", tofd.offset, "Ambient offset")->capture_default_str();
  c_tof->add_option("--steps", tofd.steps)->capture_default_str();
  c_tof->add_option("--noise", tofd.noise, "Sample noise sigma")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*c_gen) return run_gen(gen, g);
    if (*c_feat) return run_features(feat, g);
    if (*c_train) return run_train(train, g);
    if (*c_eval) return run_eval(eval, g);
    if (*c_pred) return run_predict(pred, g);
    if (*c_mon) return run_monitor(mon, g);
    if (*c_rep) return run_report(rep, g);
    if (*c_tof) return run_tof_demo(tofd, g);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
