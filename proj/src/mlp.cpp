#include "sitpose/mlp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "sitpose/error.hpp"

namespace sitpose {

namespace {

using EMatrix = Eigen::MatrixXd;
using EVector = Eigen::VectorXd;
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Column-per-sample working copy of the network.
struct Net {
  std::vector<EMatrix> w;
  std::vector<EVector> b;

  explicit Net(const MlpModel& m) {
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      w.emplace_back(Eigen::Map<const RowMajor>(m.weights[l].data().data(),
                                                static_cast<Eigen::Index>(m.weights[l].rows()),
                                                static_cast<Eigen::Index>(m.weights[l].cols())));
      b.emplace_back(Eigen::Map<const EVector>(m.biases[l].data(),
                                               static_cast<Eigen::Index>(m.biases[l].size())));
    }
  }

  void store(MlpModel& m) const {
    for (std::size_t l = 0; l < w.size(); ++l) {
      Eigen::Map<RowMajor>(m.weights[l].row(0).data(), w[l].rows(), w[l].cols()) = w[l];
      Eigen::Map<EVector>(m.biases[l].data(), b[l].size()) = b[l];
    }
  }
};

void softmax_columns(EMatrix& z) {
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    auto col = z.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
}

// Forward pass keeping every layer's activations; returns mean cross-entropy
// and, when requested, accumulates gradients into gw / gb.
double forward_backward(const Net& net, const EMatrix& input, std::span<const int> labels,
                        std::vector<EMatrix>* gw, std::vector<EVector>* gb) {
  const std::size_t layers = net.w.size();
  std::vector<EMatrix> act(layers + 1);
  act[0] = input;
  for (std::size_t l = 0; l < layers; ++l) {
    act[l + 1] = (net.w[l] * act[l]).colwise() + net.b[l];
    if (l + 1 < layers) act[l + 1] = act[l + 1].cwiseMax(0.0);
  }
  EMatrix& prob = act[layers];
  softmax_columns(prob);

  const auto batch = static_cast<double>(input.cols());
  double loss = 0.0;
  for (Eigen::Index c = 0; c < prob.cols(); ++c) {
    loss -= std::log(std::max(prob(labels[static_cast<std::size_t>(c)], c), 1e-300));
  }
  loss /= batch;
  if (!gw) return loss;

  EMatrix delta = prob;
  for (Eigen::Index c = 0; c < delta.cols(); ++c) delta(labels[static_cast<std::size_t>(c)], c) -= 1.0;
  delta /= batch;
  for (std::size_t l = layers; l-- > 0;) {
    (*gw)[l].noalias() = delta * act[l].transpose();
    (*gb)[l] = delta.rowwise().sum();
    if (l == 0) break;
    EMatrix back = net.w[l].transpose() * delta;
    delta = (act[l].array() > 0.0).select(back, 0.0);
  }
  return loss;
}

EMatrix columns_from_rows(const Matrix& x, std::span<const std::size_t> rows) {
  EMatrix out(static_cast<Eigen::Index>(x.cols()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t c = 0; c < rows.size(); ++c) {
    const auto r = x.row(rows[c]);
    for (std::size_t f = 0; f < x.cols(); ++f) out(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(c)) = r[f];
  }
  return out;
}

}  // namespace

void MlpParams::validate() const {
  if (std::any_of(hidden.begin(), hidden.end(), [](int h) { return h < 1; })) {
    throw InvalidArgument("mlp hidden layer sizes must be >= 1");
  }
  if (!(learning_rate > 0.0)) throw InvalidArgument("mlp learning rate must be positive");
  if (max_epochs < 0) throw InvalidArgument("mlp max_epochs must be >= 0");
  if (batch_size < 1) throw InvalidArgument("mlp batch size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("mlp Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw InvalidArgument("mlp epsilon must be positive");
  if (patience < 1) throw InvalidArgument("mlp patience must be >= 1");
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].data().size() + biases[l].size();
  return n;
}

std::vector<double> MlpModel::predict_proba(std::span<const double> x) const {
  std::vector<double> a = scaler.apply(x), z;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const Matrix& w = weights[l];
    z.assign(biases[l].begin(), biases[l].end());
    for (std::size_t o = 0; o < w.rows(); ++o) {
      const auto row = w.row(o);
      double s = 0.0;
      for (std::size_t i = 0; i < row.size(); ++i) s += row[i] * a[i];
      z[o] += s;
    }
    if (l + 1 < weights.size()) {
      for (double& v : z) v = std::max(v, 0.0);
    }
    a.swap(z);
  }
  const double mx = *std::max_element(a.begin(), a.end());
  double total = 0.0;
  for (double& v : a) {
    v = std::exp(v - mx);
    total += v;
  }
  for (double& v : a) v /= total;
  return a;
}

MlpModel MlpModel::zeros(std::vector<std::size_t> layer_sizes) {
  if (layer_sizes.size() < 2) throw InvalidArgument("mlp needs an input and an output layer");
  MlpModel m;
  m.layer_sizes = std::move(layer_sizes);
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    m.weights.emplace_back(m.layer_sizes[l + 1], m.layer_sizes[l]);
    m.biases.emplace_back(m.layer_sizes[l + 1], 0.0);
  }
  return m;
}

MlpModel init_mlp(std::vector<std::size_t> layer_sizes, std::uint64_t seed) {
  MlpModel m = MlpModel::zeros(std::move(layer_sizes));
  std::mt19937_64 rng(seed);
  for (auto& w : m.weights) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t r = 0; r < w.rows(); ++r) {
      for (double& v : w.row(r)) v = dist(rng);
    }
  }
  return m;
}

MlpGradient mlp_loss_and_gradient(const MlpModel& model, const Matrix& x, std::span<const int> y) {
  if (x.rows() != y.size() || x.rows() == 0) throw InvalidArgument("mlp: bad batch");
  const Net net(model);
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<EMatrix> gw(net.w.size());
  std::vector<EVector> gb(net.b.size());
  MlpGradient g;
  g.loss = forward_backward(net, columns_from_rows(model.scaler.apply(x), rows), y, &gw, &gb);
  MlpModel holder = MlpModel::zeros(model.layer_sizes);
  Net out(holder);
  out.w = gw;
  out.b = gb;
  out.store(holder);
  g.weights = std::move(holder.weights);
  g.biases = std::move(holder.biases);
  return g;
}

MlpModel train_mlp(const Matrix& x_raw, std::span<const int> y, std::size_t num_classes,
                   const MlpParams& params, std::uint64_t seed, MlpTrainingLog* log) {
  params.validate();
  if (x_raw.cols() < 1) throw InvalidArgument("mlp: feature dimension must be >= 1");
  if (x_raw.rows() == 0 || y.size() != x_raw.rows()) throw InvalidArgument("mlp: bad training data");
  for (int c : y) {
    if (c < 0 || static_cast<std::size_t>(c) >= num_classes) throw InvalidArgument("mlp: label out of range");
  }

  std::vector<std::size_t> sizes{x_raw.cols()};
  for (int h : params.hidden) sizes.push_back(static_cast<std::size_t>(h));
  sizes.push_back(num_classes);
  MlpModel model = init_mlp(sizes, seed);
  if (params.standardize) model.scaler = FeatureScaler::fit(x_raw);
  if (params.max_epochs == 0) return model;
  const Matrix x = model.scaler.apply(x_raw);

  Net net(model);
  const std::size_t layers = net.w.size();
  std::vector<EMatrix> gw(layers), mw(layers), vw(layers);
  std::vector<EVector> gb(layers), mb(layers), vb(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    mw[l] = vw[l] = EMatrix::Zero(net.w[l].rows(), net.w[l].cols());
    mb[l] = vb[l] = EVector::Zero(net.b[l].size());
  }

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<int> batch_labels;
  double best_loss = std::numeric_limits<double>::infinity();
  int stale_epochs = 0;
  std::int64_t step = 0;
  const auto batch = static_cast<std::size_t>(params.batch_size);

  for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      batch_labels.resize(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) batch_labels[i] = y[rows[i]];
      const double loss = forward_backward(net, columns_from_rows(x, rows), batch_labels, &gw, &gb);
      epoch_loss += loss * static_cast<double>(rows.size());

      ++step;
      const double c1 = 1.0 - std::pow(params.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(params.beta2, static_cast<double>(step));
      const double b1 = params.beta1, b2 = params.beta2;
      for (std::size_t l = 0; l < layers; ++l) {
        mw[l] = b1 * mw[l] + (1.0 - b1) * gw[l];
        vw[l] = b2 * vw[l] + (1.0 - b2) * gw[l].cwiseProduct(gw[l]);
        net.w[l].array() -= params.learning_rate * (mw[l].array() / c1) /
                            ((vw[l].array() / c2).sqrt() + params.epsilon);
        mb[l] = b1 * mb[l] + (1.0 - b1) * gb[l];
        vb[l] = b2 * vb[l] + (1.0 - b2) * gb[l].cwiseProduct(gb[l]);
        net.b[l].array() -= params.learning_rate * (mb[l].array() / c1) /
                            ((vb[l].array() / c2).sqrt() + params.epsilon);
      }
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss)) {
      throw TrainingError("mlp diverged at epoch " + std::to_string(epoch + 1));
    }
    if (log) log->epoch_loss.push_back(epoch_loss);
    if (epoch_loss > best_loss - params.tol) {
      if (++stale_epochs >= params.patience) break;
    } else {
      stale_epochs = 0;
    }
    best_loss = std::min(best_loss, epoch_loss);
  }
  net.store(model);
  return model;
}

}  // namespace sitpose
