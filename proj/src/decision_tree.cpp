#include "sitpose/decision_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include "sitpose/error.hpp"

namespace sitpose {

namespace {

constexpr double kGainEps = 1e-12;

struct Candidate {
  int feature = -1;
  double threshold = 0.0;
  SplitScore score;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const int> y, std::size_t k, const DecisionTreeParams& p)
      : x_(x), y_(y), k_(k), params_(p) {}

  std::vector<TreeNode> build() {
    std::vector<std::size_t> idx(x_.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    grow(idx);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<std::size_t>& idx) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    std::vector<double> counts(k_, 0.0);
    for (std::size_t i : idx) counts[static_cast<std::size_t>(y_[i])] += 1.0;
    nodes_[id].class_counts = counts;

    const auto n = idx.size();
    const auto nonzero = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; });
    if (nonzero <= 1 || n < 2 * static_cast<std::size_t>(params_.min_leaf)) return id;

    const auto best = choose_split(idx, counts);
    if (!best) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      (x_(i, static_cast<std::size_t>(best->feature)) <= best->threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    nodes_[id].feature = best->feature;
    nodes_[id].threshold = best->threshold;
    const int l = grow(left);
    nodes_[id].left = l;
    const int r = grow(right);
    nodes_[id].right = r;
    return id;
  }

  // Per feature, the threshold with the highest information gain; among
  // features whose gain is at least the average, the highest gain ratio.
  std::optional<Candidate> choose_split(std::vector<std::size_t>& idx,
                                        const std::vector<double>& counts) {
    const std::size_t n = idx.size();
    const std::size_t min_leaf = static_cast<std::size_t>(params_.min_leaf);
    std::vector<Candidate> candidates;
    std::vector<double> left(k_), right(k_);
    // Most balanced valid split, used only when no split has positive gain
    // (XOR-like layouts) so consistent data can still be fitted exactly.
    Candidate fallback;

    for (std::size_t f = 0; f < x_.cols(); ++f) {
      std::stable_sort(idx.begin(), idx.end(),
                       [&](std::size_t a, std::size_t b) { return x_(a, f) < x_(b, f); });
      std::fill(left.begin(), left.end(), 0.0);
      right = counts;
      Candidate best;
      for (std::size_t p = 0; p + 1 < n; ++p) {
        const auto c = static_cast<std::size_t>(y_[idx[p]]);
        left[c] += 1.0;
        right[c] -= 1.0;
        const std::size_t n_left = p + 1;
        if (n_left < min_leaf) continue;
        if (n - n_left < min_leaf) break;
        const double lo = x_(idx[p], f);
        if (lo == x_(idx[p + 1], f)) continue;
        const SplitScore s = score_split(left, right);
        if (s.split_info > fallback.score.split_info + kGainEps) fallback = {static_cast<int>(f), lo, s};
        if (s.gain > best.score.gain + kGainEps) {
          best = {static_cast<int>(f), lo, s};
        }
      }
      if (best.feature >= 0 && best.score.gain > kGainEps) candidates.push_back(best);
    }
    if (candidates.empty()) {
      if (fallback.feature < 0) return std::nullopt;
      return fallback;
    }

    double avg_gain = 0.0;
    for (const auto& c : candidates) avg_gain += c.score.gain;
    avg_gain /= static_cast<double>(candidates.size());

    const Candidate* chosen = nullptr;
    for (const auto& c : candidates) {
      if (c.score.gain + kGainEps < avg_gain) continue;
      if (!chosen || c.score.gain_ratio > chosen->score.gain_ratio + kGainEps) chosen = &c;
    }
    return *chosen;
  }

  const Matrix& x_;
  std::span<const int> y_;
  std::size_t k_;
  DecisionTreeParams params_;
  std::vector<TreeNode> nodes_;
};

double leaf_errors(const TreeNode& node) {
  double n = 0.0, best = 0.0;
  for (double c : node.class_counts) {
    n += c;
    best = std::max(best, c);
  }
  return n - best;
}

double estimated_leaf_errors(const TreeNode& node, double cf) {
  const double n = std::accumulate(node.class_counts.begin(), node.class_counts.end(), 0.0);
  const double e = leaf_errors(node);
  return e + pessimistic_extra_errors(n, e, cf);
}

// Returns the estimated error count of the subtree rooted at `id` after
// pruning its descendants.
double prune_subtree(std::vector<TreeNode>& nodes, int id, double cf) {
  TreeNode& node = nodes[static_cast<std::size_t>(id)];
  if (node.is_leaf()) return estimated_leaf_errors(node, cf);
  const double subtree = prune_subtree(nodes, node.left, cf) + prune_subtree(nodes, node.right, cf);
  TreeNode& self = nodes[static_cast<std::size_t>(id)];
  const double as_leaf = estimated_leaf_errors(self, cf);
  if (as_leaf <= subtree + 0.1) {
    self.feature = -1;
    self.left = self.right = -1;
    self.threshold = 0.0;
    return as_leaf;
  }
  return subtree;
}

void compact(const std::vector<TreeNode>& in, int id, std::vector<TreeNode>& out) {
  const TreeNode& src = in[static_cast<std::size_t>(id)];
  const auto pos = out.size();
  out.push_back(src);
  if (src.is_leaf()) return;
  out[pos].left = static_cast<int>(out.size());
  compact(in, src.left, out);
  out[pos].right = static_cast<int>(out.size());
  compact(in, src.right, out);
}

}  // namespace

void DecisionTreeParams::validate() const {
  if (min_leaf < 1) throw InvalidArgument("decision tree min_leaf must be >= 1");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw InvalidArgument("decision tree confidence must lie in (0, 1)");
  }
}

double entropy(std::span<const double> counts) {
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (n <= 0.0) return 0.0;
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) h -= (c / n) * std::log2(c / n);
  }
  return h;
}

SplitScore score_split(std::span<const double> left_counts, std::span<const double> right_counts) {
  const double nl = std::accumulate(left_counts.begin(), left_counts.end(), 0.0);
  const double nr = std::accumulate(right_counts.begin(), right_counts.end(), 0.0);
  const double n = nl + nr;
  SplitScore s;
  if (nl <= 0.0 || nr <= 0.0) return s;
  std::vector<double> total(left_counts.size());
  for (std::size_t i = 0; i < total.size(); ++i) total[i] = left_counts[i] + right_counts[i];
  s.gain = entropy(total) - (nl / n) * entropy(left_counts) - (nr / n) * entropy(right_counts);
  s.split_info = -(nl / n) * std::log2(nl / n) - (nr / n) * std::log2(nr / n);
  s.gain_ratio = s.split_info > 0.0 ? s.gain / s.split_info : 0.0;
  return s;
}

double pessimistic_extra_errors(double n, double errors, double cf) {
  static constexpr double kVal[] = {0, 0.001, 0.005, 0.01, 0.05, 0.10, 0.20, 0.40, 1.00};
  static constexpr double kDev[] = {4.0, 3.09, 2.58, 2.33, 1.65, 1.28, 0.84, 0.25, 0.00};
  if (n <= 0.0) return 0.0;
  std::size_t i = 0;
  while (cf > kVal[i]) ++i;
  double coeff = kDev[i];
  if (i > 0) {
    coeff = kDev[i - 1] + (kDev[i] - kDev[i - 1]) * (cf - kVal[i - 1]) / (kVal[i] - kVal[i - 1]);
  }
  coeff *= coeff;

  if (errors < 1e-6) return n * (1.0 - std::exp(std::log(cf) / n));
  if (errors < 0.9999) {
    const double v0 = n * (1.0 - std::exp(std::log(cf) / n));
    return v0 + errors * (pessimistic_extra_errors(n, 1.0, cf) - v0);
  }
  if (errors + 0.5 >= n) return 0.67 * (n - errors);
  const double e = errors + 0.5;
  const double pr =
      (e + coeff / 2.0 + std::sqrt(coeff * (e * (1.0 - e / n) + coeff / 4.0))) / (n + coeff);
  return n * pr - errors;
}

std::size_t DecisionTreeModel::leaf_for(std::span<const double> x) const {
  std::size_t id = 0;
  while (!nodes[id].is_leaf()) {
    const TreeNode& n = nodes[id];
    id = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                        : n.right);
  }
  return id;
}

std::vector<double> DecisionTreeModel::predict_proba(std::span<const double> x) const {
  const auto& counts = nodes[leaf_for(x)].class_counts;
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  const double denom = n + static_cast<double>(num_classes);
  std::vector<double> p(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) p[c] = (counts[c] + 1.0) / denom;
  return p;
}

std::size_t DecisionTreeModel::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::size_t DecisionTreeModel::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

DecisionTreeModel train_decision_tree(const Matrix& x, std::span<const int> y,
                                      std::size_t num_classes, const DecisionTreeParams& params) {
  params.validate();
  if (x.rows() == 0) throw InvalidArgument("decision tree: empty training data");
  if (y.size() != x.rows()) throw InvalidArgument("decision tree: label count mismatch");
  for (int c : y) {
    if (c < 0 || static_cast<std::size_t>(c) >= num_classes) {
      throw InvalidArgument("decision tree: label out of range");
    }
  }
  DecisionTreeModel model;
  model.num_classes = num_classes;
  auto grown = TreeBuilder(x, y, num_classes, params).build();
  if (params.prune) prune_subtree(grown, 0, params.confidence);
  compact(grown, 0, model.nodes);
  return model;
}

}  // namespace sitpose
