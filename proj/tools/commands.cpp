#include "commands.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <optional>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sitpose/error.hpp"
#include "sitpose/eval.hpp"
#include "sitpose/tof.hpp"
#include "text_util.hpp"

namespace sitpose::cli {

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) { g_interrupted.store(true); }

void install_interrupt_handler() {
  struct sigaction sa {};
  sa.sa_handler = on_interrupt;
  sigemptyset(&sa.sa_mask);
  sa.sa_flags = 0;  // no SA_RESTART: blocking reads return early
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
}

template <typename F>
auto usage_checked(F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

void note(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << '\n';
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

std::string fixed(double v) {
  std::string s;
  detail::append_fixed(s, v, 6);
  return s;
}

FeatureConfig features_for_dim(std::size_t dim) {
  FeatureConfig f;
  if (dim == f.dimension()) return f;
  f.include_head_xyz = true;
  if (dim == f.dimension()) return f;
  throw ModelFormatError("model expects " + std::to_string(dim) + " features; not a skeleton feature model");
}

struct LoadedClassifier {
  std::optional<TrainedEnsemble> ensemble;
  std::optional<TrainedModel> single;

  std::size_t feature_dim() const { return ensemble ? ensemble->feature_dim() : single->feature_dim(); }
  int predict(std::span<const double> x) const { return ensemble ? ensemble->predict(x) : single->predict(x); }
  std::vector<double> proba(std::span<const double> x) const {
    return ensemble ? ensemble->vote_soft(x).probabilities : single->predict_proba(x);
  }
};

LoadedClassifier load_classifier(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  LoadedClassifier c;
  try {
    if (is_ensemble_file(bytes)) {
      c.ensemble.emplace(deserialize_ensemble(bytes));
    } else {
      c.single.emplace(deserialize_model(bytes));
    }
  } catch (const ModelFormatError& e) {
    throw ModelFormatError(path + ": " + e.what());
  }
  return c;
}

std::vector<SkeletonFrame> read_frames(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string first;
  std::getline(in, first);
  std::vector<SkeletonFrame> frames;
  if (detail::trim(first) == dataset_header()) {
    in.close();
    const Dataset ds = load_dataset(path);
    for (const auto& row : ds.rows()) frames.push_back(row.frame);
    return frames;
  }
  std::size_t line_no = 1;
  std::string line = first;
  do {
    if (!detail::trim(line).empty()) {
      try {
        frames.push_back(parse_stream_line(line, line_no));
      } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
      }
    }
    ++line_no;
  } while (std::getline(in, line));
  return frames;
}

}  // namespace

std::vector<LearnerSpec> LearnerFlags::specs(std::uint64_t seed) const {
  std::vector<LearnerSpec> out;
  for (auto name : detail::split(learners, ',')) {
    const auto kind = parse_learner_kind(detail::trim(name));
    if (!kind) throw UsageError("unknown learner '" + std::string(name) + "' (expected dt, svm, mlp, gbdt)");
    LearnerSpec spec = LearnerSpec::defaults(*kind, seed);
    switch (*kind) {
      case LearnerKind::DecisionTree:
        spec.params = DecisionTreeParams{dt_min_leaf, dt_confidence, !dt_no_prune};
        break;
      case LearnerKind::Svm: {
        SvmParams p;
        p.degree = svm_degree;
        p.coef0 = svm_coef0;
        p.c_penalty = svm_c;
        p.tol = svm_tol;
        p.gamma = svm_gamma;
        p.max_iterations = svm_max_iter;
        p.standardize = !svm_raw;
        spec.params = p;
        break;
      }
      case LearnerKind::Mlp: {
        MlpParams p;
        p.hidden = mlp_hidden;
        p.learning_rate = mlp_lr;
        p.max_epochs = mlp_epochs;
        p.batch_size = mlp_batch;
        p.tol = mlp_tol;
        p.patience = mlp_patience;
        p.standardize = !mlp_raw;
        spec.params = p;
        break;
      }
      case LearnerKind::Gbdt: {
        GbdtParams p;
        p.n_trees = gbdt_trees;
        p.learning_rate = gbdt_lr;
        p.max_depth = gbdt_depth;
        spec.params = p;
        break;
      }
    }
    usage_checked([&] { spec.validate(); return 0; });
    out.push_back(std::move(spec));
  }
  if (out.empty()) throw UsageError("no learners given");
  if (!weights.empty() && weights.size() != out.size()) {
    throw UsageError("--weights needs one value per learner");
  }
  for (double w : weights) {
    if (!(w >= 0.0)) throw UsageError("--weights must be non-negative");
  }
  return out;
}

VotingMode LearnerFlags::voting_mode() const {
  if (mode == "soft") return VotingMode::Soft;
  if (mode == "hard") return VotingMode::Hard;
  throw UsageError("--mode must be soft or hard");
}

FeatureConfig LearnerFlags::feature_config() const {
  FeatureConfig f;
  f.include_head_xyz = include_head_xyz;
  return f;
}

MonitorConfig MonitorFlags::config() const {
  MonitorConfig c;
  c.window_s = window;
  c.abnormal_fraction = abnormal;
  c.sedentary_threshold_s = static_cast<int>(std::lround(sedentary_min * 60.0));
  c.standing_reset_s = stand_reset;
  c.realert_interval_s = static_cast<int>(std::lround(realert_min * 60.0));
  usage_checked([&] { c.validate(); return 0; });
  return c;
}

int run_gen(const GenOptions& o, const Globals& g) {
  SynthConfig cfg = SynthConfig::uniform(o.per_class, g.seed);
  cfg.jitter_sigma_mm = o.sigma;
  cfg.scale_min = o.scale_min;
  cfg.scale_max = o.scale_max;
  if (o.camera_side == "left") {
    cfg.camera.side = CameraSide::Left;
  } else if (o.camera_side == "right") {
    cfg.camera.side = CameraSide::Right;
  } else {
    throw UsageError("--camera-side must be left or right");
  }
  cfg.camera.elevation_mm = o.elevation;
  cfg.camera.yaw_deg = o.yaw;
  cfg.camera.desk_depth_mm = o.desk_depth;
  usage_checked([&] { cfg.validate(); return 0; });

  const Dataset ds = generate(cfg);
  write_dataset(ds, std::filesystem::path(o.out));
  note(g, "wrote " + std::to_string(ds.size()) + " rows to " + o.out);
  return 0;
}

int run_features(const FeaturesOptions& o, const Globals& g) {
  FeatureConfig fc;
  fc.include_head_xyz = o.include_head_xyz;
  const Dataset ds = load_dataset(o.data);
  std::string text = "label";
  for (std::size_t i = 1; i <= kNumAngles; ++i) text += ",angle" + std::to_string(i);
  text += o.include_head_xyz ? ",head_depth,head_x,head_y\n" : ",head_depth\n";
  for (const auto& row : ds.rows()) {
    text += label_name(row.label);
    for (double v : extract_features(row.frame, fc).values()) {
      text += ',';
      detail::append_fixed(text, v, 6);
    }
    text += '\n';
  }
  write_text(o.out, text);
  note(g, "wrote " + std::to_string(ds.size()) + " feature rows to " + o.out);
  return 0;
}

int run_train(const TrainOptions& o, const Globals& g) {
  const auto specs = o.learner.specs(g.seed);
  const auto mode = o.learner.voting_mode();
  const auto fc = o.learner.feature_config();
  const Dataset ds = load_dataset(o.data);
  const auto table = extract_dataset_features(ds, fc);
  if (specs.size() >= 2) {
    note(g, "training " + std::to_string(specs.size()) + " members on " + std::to_string(ds.size()) + " rows");
    const auto ens = train_ensemble(specs, table.x, table.y, kNumPostures, o.learner.weights, mode);
    save_ensemble(ens, o.out);
  } else {
    note(g, "training " + std::string(learner_short_name(specs[0].kind())) + " on " +
                std::to_string(ds.size()) + " rows");
    save_model(train_model(specs[0], table.x, table.y, kNumPostures), o.out);
  }
  note(g, "wrote " + o.out);
  return 0;
}

int run_eval(const EvalOptions& o, const Globals& g) {
  CrossValidationConfig cfg;
  cfg.learners = o.learner.specs(g.seed);
  cfg.weights = o.learner.weights;
  cfg.mode = o.learner.voting_mode();
  cfg.features = o.learner.feature_config();
  cfg.folds = o.folds;
  cfg.seed = g.seed;
  if (o.folds < 2) throw UsageError("--folds must be at least 2");
  const Dataset ds = load_dataset(o.data);
  const auto result = cross_validate(ds, cfg);
  const std::string report = render_cv_report(result);
  if (o.report.empty()) {
    std::cout << report;
  } else {
    write_text(o.report, report);
  }
  if (!o.chart.empty()) write_text(o.chart, render_cv_chart_csv(result));
  std::string summary = "ensemble weighted F1 " + fixed(result.ensemble_mean.weighted_f1);
  for (std::size_t m = 0; m < result.member_names.size(); ++m) {
    summary += "; " + result.member_names[m] + " " + fixed(result.member_means[m].weighted_f1);
  }
  note(g, summary);
  return 0;
}

int run_predict(const PredictOptions& o, const Globals& /*g*/) {
  const auto model = load_classifier(o.model);
  const auto fc = features_for_dim(model.feature_dim());
  const auto frames = read_frames(o.input);
  std::string out;
  for (const auto& frame : frames) {
    const auto x = extract_features(frame, fc).values();
    out += label_name(label_from_code(model.predict(x)));
    if (o.proba) {
      for (double p : model.proba(x)) out += "," + detail::shortest(p);
    }
    out += '\n';
  }
  std::cout << out;
  return 0;
}

namespace {

int finish_session(const SessionReport& report, const MonitorFlags& flags) {
  const std::string text = render_report(report);
  if (flags.report.empty()) {
    std::cout << text;
  } else {
    write_text(flags.report, text);
  }
  if (!flags.csv.empty()) write_text(flags.csv, render_report_csv(report));
  return 0;
}

void print_alert(const Alert& a) { std::cerr << a.line() << '\n'; }

}  // namespace

int run_monitor(const MonitorOptions& o, const Globals& g) {
  const MonitorConfig cfg = o.flags.config();
  std::unique_ptr<FrameSource> source;
  std::ifstream replay;
  std::optional<std::uint16_t> port;
  if (o.source == "stdin") {
  } else if (o.source.rfind("tcp:", 0) == 0) {
    const auto p = detail::parse_int<std::uint16_t>(std::string_view(o.source).substr(4));
    if (!p) throw UsageError("bad TCP port in --source " + o.source);
    port = *p;
  } else if (o.source.rfind("replay:", 0) == 0) {
  } else {
    throw UsageError("--source must be stdin, tcp:PORT or replay:FILE");
  }

  const auto model = load_classifier(o.model);
  const auto fc = features_for_dim(model.feature_dim());

  install_interrupt_handler();
  if (o.source == "stdin") {
    source = std::make_unique<StreamFrameSource>(std::cin, RecordFormat::Stream);
  } else if (port) {
    auto tcp = std::make_unique<TcpFrameSource>(*port, &g_interrupted);
    note(g, "listening on port " + std::to_string(tcp->port()));
    source = std::move(tcp);
  } else {
    const std::string path = o.source.substr(7);
    replay.open(path);
    if (!replay) throw Error("cannot open replay file '" + path + "'");
    source = std::make_unique<StreamFrameSource>(replay, RecordFormat::Dataset);
  }

  StreamOptions opts;
  opts.on_alert = print_alert;
  opts.stop = &g_interrupted;
  const FrameClassifier classify = [&](const SkeletonFrame& frame) {
    return label_from_code(model.predict(extract_features(frame, fc).values()));
  };
  const auto report = run_stream(*source, classify, cfg, opts);
  if (report.skipped_records > 0) {
    note(g, "skipped " + std::to_string(report.skipped_records) + " malformed records");
  }
  return finish_session(report, o.flags);
}

int run_report(const ReportOptions& o, const Globals& /*g*/) {
  const MonitorConfig cfg = o.flags.config();
  std::ifstream in(o.labels);
  if (!in) throw Error("cannot open label file '" + o.labels + "'");
  SessionState state;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    std::optional<PostureLabel> label = parse_label(text);
    if (!label) {
      if (const auto code = detail::parse_int<int>(text); code && *code >= 0 && *code < 7) {
        label = label_from_code(*code);
      }
    }
    if (!label) throw ParseError(o.labels + ": unknown posture label '" + std::string(text) + "'", line_no);
    for (const auto& a : tick(state, *label, cfg)) print_alert(a);
  }
  return finish_session(make_report(state), o.flags);
}

int run_tof_demo(const TofDemoOptions& o, const Globals& g) {
  tof::TofConfig cfg;
  cfg.modulation_frequency_hz = o.frequency;
  usage_checked([&] { cfg.validate(); return 0; });
  if (!(o.amplitude > 0.0) || !(o.offset >= 0.0) || o.steps < 1 || !(o.noise >= 0.0)) {
    throw UsageError("tof-demo needs amplitude > 0, offset >= 0, steps >= 1, noise >= 0");
  }
  std::ostringstream out;
  out << "phase_rad,r0,r1,r2,r3,recovered_rad,depth_m,expected_depth_m\n";
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (int i = 0; i < o.steps; ++i) {
    const double phase = kTwoPi * i / o.steps;
    const auto s = o.noise > 0.0
                       ? tof::sample_received_noisy(o.amplitude, o.offset, phase, cfg, o.noise,
                                                    g.seed + static_cast<std::uint64_t>(i))
                       : tof::sample_received(o.amplitude, o.offset, phase, cfg);
    const double rec = tof::phase_from_samples(s);
    out << detail::shortest(phase) << ',' << detail::shortest(s.r0) << ',' << detail::shortest(s.r1)
        << ',' << detail::shortest(s.r2) << ',' << detail::shortest(s.r3) << ','
        << detail::shortest(rec) << ',' << detail::shortest(tof::depth_from_phase(rec, cfg)) << ','
        << detail::shortest(tof::depth_from_phase(phase, cfg)) << '\n';
  }
  std::cout << out.str();
  return 0;
}

}  // namespace sitpose::cli
