#include "sitpose/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sitpose/error.hpp"

namespace sitpose {

namespace {

// Least-squares regression tree on residuals with Newton leaf values for
// the multinomial deviance.
class ResidualTreeBuilder {
 public:
  ResidualTreeBuilder(const Matrix& x, std::span<const double> residual, double k_scale,
                      const GbdtParams& params)
      : x_(x), r_(residual), k_scale_(k_scale), params_(params) {}

  RegressionTree build() {
    std::vector<std::size_t> idx(x_.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    grow(idx, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t>& idx, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[id].value = newton_value(idx);

    const auto min_leaf = static_cast<std::size_t>(params_.min_leaf);
    if (depth >= params_.max_depth || idx.size() < 2 * min_leaf) return id;

    const std::size_t n = idx.size();
    double total = 0.0;
    for (std::size_t i : idx) total += r_[i];
    const double base = total * total / static_cast<double>(n);

    int best_feature = -1;
    double best_threshold = 0.0, best_gain = 1e-12;
    for (std::size_t f = 0; f < x_.cols(); ++f) {
      std::stable_sort(idx.begin(), idx.end(),
                       [&](std::size_t a, std::size_t b) { return x_(a, f) < x_(b, f); });
      double left = 0.0;
      for (std::size_t p = 0; p + 1 < n; ++p) {
        left += r_[idx[p]];
        const std::size_t nl = p + 1;
        if (nl < min_leaf) continue;
        if (n - nl < min_leaf) break;
        const double lo = x_(idx[p], f), hi = x_(idx[p + 1], f);
        if (lo == hi) continue;
        const double right = total - left;
        const double gain = left * left / static_cast<double>(nl) +
                            right * right / static_cast<double>(n - nl) - base;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = lo + (hi - lo) / 2.0;
          if (best_threshold >= hi) best_threshold = lo;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> l, r;
    for (std::size_t i : idx) {
      (x_(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? l : r).push_back(i);
    }
    tree_.nodes[id].feature = best_feature;
    tree_.nodes[id].threshold = best_threshold;
    const int li = grow(l, depth + 1);
    tree_.nodes[id].left = li;
    const int ri = grow(r, depth + 1);
    tree_.nodes[id].right = ri;
    return id;
  }

  double newton_value(std::span<const std::size_t> idx) const {
    double num = 0.0, den = 0.0;
    for (std::size_t i : idx) {
      num += r_[i];
      den += std::abs(r_[i]) * (1.0 - std::abs(r_[i]));
    }
    if (den < 1e-150) return 0.0;
    return k_scale_ * num / den;
  }

  const Matrix& x_;
  std::span<const double> r_;
  double k_scale_;
  GbdtParams params_;
  RegressionTree tree_;
};

double log_loss(const Matrix& scores, std::span<const int> y) {
  double loss = 0.0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto p = softmax(scores.row(i));
    loss -= std::log(std::max(p[static_cast<std::size_t>(y[i])], 1e-300));
  }
  return loss / static_cast<double>(scores.rows());
}

}  // namespace

void GbdtParams::validate() const {
  if (n_trees < 1) throw InvalidArgument("gbdt n_trees must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("gbdt learning rate must be finite and >= 0");
  }
  if (max_depth < 1) throw InvalidArgument("gbdt max_depth must be >= 1");
  if (min_leaf < 1) throw InvalidArgument("gbdt min_leaf must be >= 1");
}

std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> p(scores.begin(), scores.end());
  const double mx = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& v : p) {
    v = std::exp(v - mx);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t id = 0;
  while (!nodes[id].is_leaf()) {
    const auto& n = nodes[id];
    id = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[id].value;
}

std::vector<double> GbdtModel::staged_scores(std::span<const double> x, std::size_t n_rounds) const {
  std::vector<double> s = initial_scores;
  const std::size_t upto = std::min(n_rounds, rounds.size());
  for (std::size_t r = 0; r < upto; ++r) {
    for (std::size_t k = 0; k < num_classes; ++k) s[k] += learning_rate * rounds[r][k].predict(x);
  }
  return s;
}

std::vector<double> GbdtModel::staged_proba(std::span<const double> x, std::size_t n_rounds) const {
  return softmax(staged_scores(x, n_rounds));
}

std::vector<double> GbdtModel::predict_proba(std::span<const double> x) const {
  return staged_proba(x, rounds.size());
}

GbdtModel train_gbdt(const Matrix& x, std::span<const int> y, std::size_t num_classes,
                     const GbdtParams& params, std::uint64_t /*seed*/, GbdtTrainingLog* log) {
  params.validate();
  if (x.rows() == 0 || y.size() != x.rows()) throw InvalidArgument("gbdt: bad training data");
  std::vector<double> counts(num_classes, 0.0);
  for (int c : y) {
    if (c < 0 || static_cast<std::size_t>(c) >= num_classes) throw InvalidArgument("gbdt: label out of range");
    counts[static_cast<std::size_t>(c)] += 1.0;
  }
  if (std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) < 2) {
    throw InvalidArgument("gbdt: at least two classes required");
  }

  GbdtModel model;
  model.num_classes = num_classes;
  model.learning_rate = params.learning_rate;
  const double n = static_cast<double>(x.rows());
  for (double c : counts) model.initial_scores.push_back(std::log(std::max(c / n, 1e-15)));

  Matrix scores(x.rows(), num_classes);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::copy(model.initial_scores.begin(), model.initial_scores.end(), scores.row(i).begin());
  }
  const double k = static_cast<double>(num_classes);
  const double k_scale = (k - 1.0) / k;
  std::vector<double> residual(x.rows());
  Matrix prob(x.rows(), num_classes);

  for (int round = 0; round < params.n_trees; ++round) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto p = softmax(scores.row(i));
      std::copy(p.begin(), p.end(), prob.row(i).begin());
    }
    std::vector<RegressionTree> trees;
    trees.reserve(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) {
      for (std::size_t i = 0; i < x.rows(); ++i) {
        residual[i] = (static_cast<std::size_t>(y[i]) == c ? 1.0 : 0.0) - prob(i, c);
      }
      trees.push_back(ResidualTreeBuilder(x, residual, k_scale, params).build());
    }
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t c = 0; c < num_classes; ++c) {
        scores(i, c) += params.learning_rate * trees[c].predict(x.row(i));
      }
    }
    model.rounds.push_back(std::move(trees));
    if (log) log->round_loss.push_back(log_loss(scores, y));
  }
  return model;
}

}  // namespace sitpose
