#include "sitpose/eval.hpp"

#include <algorithm>
#include <future>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "sitpose/error.hpp"
#include "text_util.hpp"

namespace sitpose {

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

std::string fixed(double v, int digits = 6) {
  std::string s;
  detail::append_fixed(s, v, digits);
  return s;
}

void render_confusion(std::ostringstream& out, const ConfusionMatrix& cm) {
  out << "truth\\pred";
  for (std::size_t c = 0; c < cm.num_classes(); ++c) out << ' ' << c;
  out << '\n';
  for (std::size_t t = 0; t < cm.num_classes(); ++t) {
    out << t;
    for (std::size_t p = 0; p < cm.num_classes(); ++p) out << ' ' << cm(t, p);
    out << '\n';
  }
}

void render_metrics(std::ostringstream& out, const MetricReport& r) {
  out << "weighted_f1 = " << fixed(r.weighted_f1) << '\n';
  out << "weighted_precision = " << fixed(r.weighted_precision) << '\n';
  out << "weighted_recall = " << fixed(r.weighted_recall) << '\n';
  out << "accuracy = " << fixed(r.accuracy) << '\n';
  out << "class precision recall f1 support\n";
  for (std::size_t c = 0; c < r.f1.size(); ++c) {
    const std::string name = c < kNumPostures ? std::string(label_name(static_cast<PostureLabel>(c)))
                                              : std::to_string(c);
    out << name << ' ' << fixed(r.precision[c]) << ' ' << fixed(r.recall[c]) << ' '
        << fixed(r.f1[c]) << ' ' << fixed(r.support[c], 1) << '\n';
  }
}

}  // namespace

std::uint64_t ConfusionMatrix::support(std::size_t truth) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < k_; ++p) s += (*this)(truth, p);
  return s;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw InvalidArgument("confusion matrix size mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::size_t num_classes) {
  if (truth.size() != predicted.size()) throw InvalidArgument("label sequences differ in length");
  if (truth.empty()) throw InvalidArgument("confusion matrix needs at least one label");
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= num_classes ||
        static_cast<std::size_t>(p) >= num_classes) {
      throw InvalidArgument("label code out of range");
    }
    ++cm(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  return cm;
}

MetricReport metrics(const ConfusionMatrix& cm) {
  const std::size_t k = cm.num_classes();
  MetricReport r;
  r.precision.resize(k);
  r.recall.resize(k);
  r.f1.resize(k);
  r.support.resize(k);
  const double n = static_cast<double>(cm.total());
  double correct = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double tp = static_cast<double>(cm(c, c));
    double predicted = 0.0;
    for (std::size_t t = 0; t < k; ++t) predicted += static_cast<double>(cm(t, c));
    const double support = static_cast<double>(cm.support(c));
    correct += tp;
    r.support[c] = support;
    r.precision[c] = ratio(tp, predicted);
    r.recall[c] = ratio(tp, support);
    r.f1[c] = ratio(2.0 * r.precision[c] * r.recall[c], r.precision[c] + r.recall[c]);
  }
  for (std::size_t c = 0; c < k; ++c) {
    const double w = ratio(r.support[c], n);
    r.weighted_f1 += w * r.f1[c];
    r.weighted_precision += w * r.precision[c];
    r.weighted_recall += w * r.recall[c];
  }
  r.accuracy = ratio(correct, n);
  return r;
}

MetricReport mean_report(std::span<const MetricReport> reports) {
  if (reports.empty()) return {};
  MetricReport m;
  const std::size_t k = reports.front().f1.size();
  m.precision.assign(k, 0.0);
  m.recall.assign(k, 0.0);
  m.f1.assign(k, 0.0);
  m.support.assign(k, 0.0);
  const double n = static_cast<double>(reports.size());
  for (const auto& r : reports) {
    for (std::size_t c = 0; c < k; ++c) {
      m.precision[c] += r.precision[c] / n;
      m.recall[c] += r.recall[c] / n;
      m.f1[c] += r.f1[c] / n;
      m.support[c] += r.support[c] / n;
    }
    m.weighted_f1 += r.weighted_f1 / n;
    m.weighted_precision += r.weighted_precision / n;
    m.weighted_recall += r.weighted_recall / n;
    m.accuracy += r.accuracy / n;
  }
  return m;
}

std::vector<int> stratified_folds(std::span<const int> labels, std::size_t num_classes,
                                  std::size_t k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class.at(static_cast<std::size_t>(labels[i])).push_back(i);
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (!by_class[c].empty() && by_class[c].size() < k) {
      const std::string name = c < kNumPostures ? std::string(label_name(static_cast<PostureLabel>(c)))
                                                : std::to_string(c);
      throw InvalidArgument("class " + name + " has " + std::to_string(by_class[c].size()) +
                            " rows, fewer than the " + std::to_string(k) + " folds");
    }
  }
  std::vector<int> fold(labels.size(), -1);
  std::mt19937_64 rng(seed);
  std::size_t next = 0;
  for (auto& rows : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t i : rows) {
      fold[i] = static_cast<int>(next % k);
      ++next;
    }
  }
  return fold;
}

CrossValidationResult cross_validate(const Dataset& dataset, const CrossValidationConfig& config) {
  if (config.learners.empty()) throw InvalidArgument("cross-validation needs at least one learner");
  for (const auto& spec : config.learners) spec.validate();
  const auto table = extract_dataset_features(dataset, config.features);
  const auto fold_of = stratified_folds(table.y, kNumPostures, config.folds, config.seed);

  CrossValidationResult result;
  for (const auto& spec : config.learners) {
    result.member_names.emplace_back(learner_short_name(spec.kind()));
  }

  auto run_fold = [&](std::size_t f) {
    FoldResult fr;
    Matrix xtr, xte;
    std::vector<int> ytr, yte;
    for (std::size_t i = 0; i < table.y.size(); ++i) {
      if (static_cast<std::size_t>(fold_of[i]) == f) {
        xte.append_row(table.x.row(i));
        yte.push_back(table.y[i]);
        fr.test_rows.push_back(i);
      } else {
        xtr.append_row(table.x.row(i));
        ytr.push_back(table.y[i]);
      }
    }
    fr.train_rows = ytr.size();

    std::vector<TrainedModel> members;
    for (const auto& spec : config.learners) members.push_back(train_model(spec, xtr, ytr, kNumPostures));

    std::vector<std::vector<int>> member_pred(members.size());
    std::vector<int> ens_pred;
    std::vector<std::vector<double>> probs(members.size());
    std::vector<double> weights = config.weights.empty() ? std::vector<double>(members.size(), 1.0)
                                                         : config.weights;
    std::vector<int> labels(members.size());
    for (std::size_t i = 0; i < yte.size(); ++i) {
      for (std::size_t m = 0; m < members.size(); ++m) {
        probs[m] = members[m].predict_proba(xte.row(i));
        labels[m] = static_cast<int>(argmax(probs[m]));
        member_pred[m].push_back(labels[m]);
      }
      ens_pred.push_back(config.mode == VotingMode::Soft ? soft_vote(probs, weights).label
                                                         : hard_vote(labels, weights, kNumPostures));
    }
    fr.ensemble_confusion = confusion(yte, ens_pred, kNumPostures);
    fr.ensemble = metrics(fr.ensemble_confusion);
    for (std::size_t m = 0; m < members.size(); ++m) {
      fr.member_confusion.push_back(confusion(yte, member_pred[m], kNumPostures));
      fr.members.push_back(metrics(fr.member_confusion.back()));
    }
    return fr;
  };

  if (config.weights.size() > 0 && config.weights.size() != config.learners.size()) {
    throw InvalidArgument("one weight per learner required");
  }
  const bool threaded = config.parallel && std::thread::hardware_concurrency() > 1;
  if (threaded) {
    std::vector<std::future<FoldResult>> pending;
    for (std::size_t f = 0; f < config.folds; ++f) pending.push_back(std::async(std::launch::async, run_fold, f));
    for (auto& p : pending) result.folds.push_back(p.get());
  } else {
    for (std::size_t f = 0; f < config.folds; ++f) result.folds.push_back(run_fold(f));
  }

  std::vector<MetricReport> ens;
  result.ensemble_confusion = ConfusionMatrix(kNumPostures);
  result.member_confusion.assign(config.learners.size(), ConfusionMatrix(kNumPostures));
  std::vector<std::vector<MetricReport>> per_member(config.learners.size());
  for (const auto& fr : result.folds) {
    ens.push_back(fr.ensemble);
    result.ensemble_confusion += fr.ensemble_confusion;
    for (std::size_t m = 0; m < fr.members.size(); ++m) {
      per_member[m].push_back(fr.members[m]);
      result.member_confusion[m] += fr.member_confusion[m];
    }
  }
  result.ensemble_mean = mean_report(ens);
  for (const auto& reports : per_member) result.member_means.push_back(mean_report(reports));
  return result;
}

std::string render_cv_report(const CrossValidationResult& result) {
  std::ostringstream out;
  out << "# cross-validation report\n";
  out << "folds = " << result.folds.size() << '\n';
  out << "members =";
  for (const auto& n : result.member_names) out << ' ' << n;
  out << '\n';
  for (std::size_t f = 0; f < result.folds.size(); ++f) {
    const auto& fr = result.folds[f];
    out << "\n[fold " << f << "]\n";
    out << "train_rows = " << fr.train_rows << "\ntest_rows = " << fr.test_rows.size() << '\n';
    out << "ensemble_weighted_f1 = " << fixed(fr.ensemble.weighted_f1) << '\n';
    for (std::size_t m = 0; m < fr.members.size(); ++m) {
      out << result.member_names[m] << "_weighted_f1 = " << fixed(fr.members[m].weighted_f1) << '\n';
    }
  }
  out << "\n[mean ensemble]\n";
  render_metrics(out, result.ensemble_mean);
  out << "\n[confusion ensemble]\n";
  render_confusion(out, result.ensemble_confusion);
  for (std::size_t m = 0; m < result.member_means.size(); ++m) {
    out << "\n[mean " << result.member_names[m] << "]\n";
    render_metrics(out, result.member_means[m]);
    out << "\n[confusion " << result.member_names[m] << "]\n";
    render_confusion(out, result.member_confusion[m]);
  }
  return out.str();
}

std::string render_cv_chart_csv(const CrossValidationResult& result) {
  std::ostringstream out;
  out << "model,class,precision,recall,f1\n";
  auto emit = [&](const std::string& model, const MetricReport& r) {
    for (std::size_t c = 0; c < r.f1.size(); ++c) {
      out << model << ',' << label_name(static_cast<PostureLabel>(c)) << ',' << fixed(r.precision[c])
          << ',' << fixed(r.recall[c]) << ',' << fixed(r.f1[c]) << '\n';
    }
    out << model << ",weighted," << fixed(r.weighted_precision) << ',' << fixed(r.weighted_recall)
        << ',' << fixed(r.weighted_f1) << '\n';
  };
  for (std::size_t m = 0; m < result.member_means.size(); ++m) emit(result.member_names[m], result.member_means[m]);
  emit("ensemble", result.ensemble_mean);
  return out.str();
}

}  // namespace sitpose
