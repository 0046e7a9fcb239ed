#include "sitpose/learners.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

#include "binary_io.hpp"
#include "model_codec.hpp"
#include "sitpose/error.hpp"

namespace sitpose {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

using detail::ByteReader;
using detail::ByteWriter;

void write_matrix(ByteWriter& w, const Matrix& m) {
  w.size(m.rows());
  w.size(m.cols());
  for (double v : m.data()) w.f64(v);
}

Matrix read_matrix(ByteReader& r) {
  const std::size_t rows = r.count(0);
  const std::size_t cols = r.count(0);
  if (cols > 0 && rows > r.remaining() / 8 / cols) throw ModelFormatError("truncated model file");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (double& v : m.row(i)) v = r.f64();
  }
  return m;
}

void check(bool ok, const char* what) {
  if (!ok) throw ModelFormatError(std::string("invalid model payload: ") + what);
}

// Children must point forward so that traversal always terminates.
template <class Node>
void check_tree(const std::vector<Node>& nodes, std::size_t dim) {
  check(!nodes.empty(), "empty tree");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.feature < 0) continue;
    check(static_cast<std::size_t>(n.feature) < dim, "split feature out of range");
    check(n.left > static_cast<int>(i) && static_cast<std::size_t>(n.left) < nodes.size(), "bad child");
    check(n.right > static_cast<int>(i) && static_cast<std::size_t>(n.right) < nodes.size(), "bad child");
  }
}

void write_scaler(ByteWriter& w, const FeatureScaler& s) {
  w.f64s(s.mean);
  w.f64s(s.scale);
}

FeatureScaler read_scaler(ByteReader& r, std::size_t dim) {
  FeatureScaler s;
  s.mean = r.f64s();
  s.scale = r.f64s();
  check(s.mean.size() == s.scale.size() && (s.mean.empty() || s.mean.size() == dim), "scaler width");
  for (double v : s.scale) check(v > 0.0 && std::isfinite(v), "scaler scale");
  return s;
}

void write_params(ByteWriter& w, const Hyperparameters& hp) {
  std::visit(Overloaded{
                 [&](const DecisionTreeParams& p) {
                   w.i32(p.min_leaf);
                   w.f64(p.confidence);
                   w.u8(p.prune ? 1 : 0);
                 },
                 [&](const SvmParams& p) {
                   w.i32(p.degree);
                   w.f64(p.coef0);
                   w.f64(p.c_penalty);
                   w.f64(p.tol);
                   w.i64(p.max_iterations);
                   w.f64(p.gamma);
                   w.f64(p.cache_mb);
                   w.u8(p.standardize ? 1 : 0);
                 },
                 [&](const MlpParams& p) {
                   w.size(p.hidden.size());
                   for (int h : p.hidden) w.i32(h);
                   w.f64(p.learning_rate);
                   w.i32(p.max_epochs);
                   w.i32(p.batch_size);
                   w.f64(p.beta1);
                   w.f64(p.beta2);
                   w.f64(p.epsilon);
                   w.f64(p.tol);
                   w.i32(p.patience);
                   w.u8(p.standardize ? 1 : 0);
                 },
                 [&](const GbdtParams& p) {
                   w.i32(p.n_trees);
                   w.f64(p.learning_rate);
                   w.i32(p.max_depth);
                   w.i32(p.min_leaf);
                 },
             },
             hp);
}

Hyperparameters read_params(ByteReader& r, LearnerKind kind) {
  switch (kind) {
    case LearnerKind::DecisionTree: {
      DecisionTreeParams p;
      p.min_leaf = r.i32();
      p.confidence = r.f64();
      p.prune = r.u8() != 0;
      return p;
    }
    case LearnerKind::Svm: {
      SvmParams p;
      p.degree = r.i32();
      p.coef0 = r.f64();
      p.c_penalty = r.f64();
      p.tol = r.f64();
      p.max_iterations = r.i64();
      p.gamma = r.f64();
      p.cache_mb = r.f64();
      p.standardize = r.u8() != 0;
      return p;
    }
    case LearnerKind::Mlp: {
      MlpParams p;
      p.hidden.resize(r.count(4));
      for (int& h : p.hidden) h = r.i32();
      p.learning_rate = r.f64();
      p.max_epochs = r.i32();
      p.batch_size = r.i32();
      p.beta1 = r.f64();
      p.beta2 = r.f64();
      p.epsilon = r.f64();
      p.tol = r.f64();
      p.patience = r.i32();
      p.standardize = r.u8() != 0;
      return p;
    }
    case LearnerKind::Gbdt: {
      GbdtParams p;
      p.n_trees = r.i32();
      p.learning_rate = r.f64();
      p.max_depth = r.i32();
      p.min_leaf = r.i32();
      return p;
    }
  }
  throw ModelFormatError("unknown model kind");
}

void write_payload(ByteWriter& w, const ModelParameters& params) {
  std::visit(Overloaded{
                 [&](const DecisionTreeModel& m) {
                   w.size(m.num_classes);
                   w.size(m.nodes.size());
                   for (const auto& n : m.nodes) {
                     w.i32(n.feature);
                     w.f64(n.threshold);
                     w.i32(n.left);
                     w.i32(n.right);
                     w.f64s(n.class_counts);
                   }
                 },
                 [&](const SvmModel& m) {
                   w.f64(m.kernel.gamma);
                   w.f64(m.kernel.coef0);
                   w.i32(m.kernel.degree);
                   write_scaler(w, m.scaler);
                   w.size(m.num_classes);
                   write_matrix(w, m.support_vectors);
                   w.size(m.present_classes.size());
                   for (int c : m.present_classes) w.i32(c);
                   w.size(m.machines.size());
                   for (const auto& mach : m.machines) {
                     w.i32(mach.positive_class);
                     w.i32(mach.negative_class);
                     w.f64(mach.rho);
                     w.f64(mach.sigmoid.a);
                     w.f64(mach.sigmoid.b);
                     w.size(mach.sv_index.size());
                     for (auto s : mach.sv_index) w.u32(s);
                     w.f64s(mach.coef);
                   }
                 },
                 [&](const MlpModel& m) {
                   w.size(m.layer_sizes.size());
                   for (auto s : m.layer_sizes) w.size(s);
                   write_scaler(w, m.scaler);
                   for (std::size_t l = 0; l < m.weights.size(); ++l) {
                     write_matrix(w, m.weights[l]);
                     w.f64s(m.biases[l]);
                   }
                 },
                 [&](const GbdtModel& m) {
                   w.size(m.num_classes);
                   w.f64(m.learning_rate);
                   w.f64s(m.initial_scores);
                   w.size(m.rounds.size());
                   for (const auto& round : m.rounds) {
                     for (const auto& tree : round) {
                       w.size(tree.nodes.size());
                       for (const auto& n : tree.nodes) {
                         w.i32(n.feature);
                         w.f64(n.threshold);
                         w.i32(n.left);
                         w.i32(n.right);
                         w.f64(n.value);
                       }
                     }
                   }
                 },
             },
             params);
}

ModelParameters read_payload(ByteReader& r, LearnerKind kind, std::size_t dim, std::size_t k) {
  switch (kind) {
    case LearnerKind::DecisionTree: {
      DecisionTreeModel m;
      m.num_classes = r.count(0);
      check(m.num_classes == k, "class count");
      m.nodes.resize(r.count(28));
      for (auto& n : m.nodes) {
        n.feature = r.i32();
        n.threshold = r.f64();
        n.left = r.i32();
        n.right = r.i32();
        n.class_counts = r.f64s();
        check(n.class_counts.size() == k, "leaf counts");
      }
      check_tree(m.nodes, dim);
      return m;
    }
    case LearnerKind::Svm: {
      SvmModel m;
      m.kernel.gamma = r.f64();
      m.kernel.coef0 = r.f64();
      m.kernel.degree = r.i32();
      check(m.kernel.degree >= 1, "kernel degree");
      m.scaler = read_scaler(r, dim);
      m.num_classes = r.count(0);
      check(m.num_classes == k, "class count");
      m.support_vectors = read_matrix(r);
      check(m.support_vectors.rows() == 0 || m.support_vectors.cols() == dim, "support vector width");
      m.present_classes.resize(r.count(4));
      for (int& c : m.present_classes) {
        c = r.i32();
        check(c >= 0 && static_cast<std::size_t>(c) < k, "class code");
      }
      check(!m.present_classes.empty(), "no classes");
      m.machines.resize(r.count(40));
      const std::size_t pk = m.present_classes.size();
      check(m.machines.size() == pk * (pk - 1) / 2, "machine count");
      for (auto& mach : m.machines) {
        mach.positive_class = r.i32();
        mach.negative_class = r.i32();
        check(std::find(m.present_classes.begin(), m.present_classes.end(), mach.positive_class) !=
                  m.present_classes.end(),
              "machine class");
        check(std::find(m.present_classes.begin(), m.present_classes.end(), mach.negative_class) !=
                  m.present_classes.end(),
              "machine class");
        mach.rho = r.f64();
        mach.sigmoid.a = r.f64();
        mach.sigmoid.b = r.f64();
        mach.sv_index.resize(r.count(4));
        for (auto& s : mach.sv_index) {
          s = r.u32();
          check(s < m.support_vectors.rows(), "support vector index");
        }
        mach.coef = r.f64s();
        check(mach.coef.size() == mach.sv_index.size(), "coefficient count");
      }
      return m;
    }
    case LearnerKind::Mlp: {
      MlpModel m;
      m.layer_sizes.resize(r.count(8));
      for (auto& s : m.layer_sizes) s = r.count(0);
      check(m.layer_sizes.size() >= 2 && m.layer_sizes.front() == dim && m.layer_sizes.back() == k,
            "layer sizes");
      m.scaler = read_scaler(r, dim);
      for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
        m.weights.push_back(read_matrix(r));
        m.biases.push_back(r.f64s());
        check(m.weights.back().rows() == m.layer_sizes[l + 1] &&
                  m.weights.back().cols() == m.layer_sizes[l] &&
                  m.biases.back().size() == m.layer_sizes[l + 1],
              "layer shape");
      }
      return m;
    }
    case LearnerKind::Gbdt: {
      GbdtModel m;
      m.num_classes = r.count(0);
      check(m.num_classes == k, "class count");
      m.learning_rate = r.f64();
      m.initial_scores = r.f64s();
      check(m.initial_scores.size() == k, "initial scores");
      m.rounds.resize(r.count(8 * k));
      for (auto& round : m.rounds) {
        round.resize(k);
        for (auto& tree : round) {
          tree.nodes.resize(r.count(28));
          for (auto& n : tree.nodes) {
            n.feature = r.i32();
            n.threshold = r.f64();
            n.left = r.i32();
            n.right = r.i32();
            n.value = r.f64();
          }
          check_tree(tree.nodes, dim);
        }
      }
      return m;
    }
  }
  throw ModelFormatError("unknown model kind");
}

}  // namespace

std::string_view learner_short_name(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::DecisionTree: return "dt";
    case LearnerKind::Svm: return "svm";
    case LearnerKind::Mlp: return "mlp";
    case LearnerKind::Gbdt: return "gbdt";
  }
  return "?";
}

std::optional<LearnerKind> parse_learner_kind(std::string_view name) {
  for (auto k : {LearnerKind::DecisionTree, LearnerKind::Svm, LearnerKind::Mlp, LearnerKind::Gbdt}) {
    if (learner_short_name(k) == name) return k;
  }
  return std::nullopt;
}

LearnerKind LearnerSpec::kind() const {
  return std::visit(Overloaded{
                        [](const DecisionTreeParams&) { return LearnerKind::DecisionTree; },
                        [](const SvmParams&) { return LearnerKind::Svm; },
                        [](const MlpParams&) { return LearnerKind::Mlp; },
                        [](const GbdtParams&) { return LearnerKind::Gbdt; },
                    },
                    params);
}

void LearnerSpec::validate() const {
  std::visit([](const auto& p) { p.validate(); }, params);
}

LearnerSpec LearnerSpec::defaults(LearnerKind kind, std::uint64_t seed) {
  switch (kind) {
    case LearnerKind::DecisionTree: return {DecisionTreeParams{}, seed};
    case LearnerKind::Svm: return {SvmParams{}, seed};
    case LearnerKind::Mlp: return {MlpParams{}, seed};
    case LearnerKind::Gbdt: return {GbdtParams{}, seed};
  }
  throw InvalidArgument("unknown learner kind");
}

TrainedModel::TrainedModel(LearnerSpec spec, std::size_t feature_dim, std::size_t num_classes,
                           ModelParameters parameters)
    : spec_(std::move(spec)),
      feature_dim_(feature_dim),
      num_classes_(num_classes),
      parameters_(std::move(parameters)) {
  if (spec_.params.index() != parameters_.index()) {
    throw InvalidArgument("learner spec and model parameters disagree on kind");
  }
}

std::vector<int> TrainedModel::class_list() const {
  std::vector<int> c(num_classes_);
  std::iota(c.begin(), c.end(), 0);
  return c;
}

std::vector<double> TrainedModel::predict_proba(std::span<const double> x) const {
  if (x.size() != feature_dim_) {
    throw InvalidArgument("feature dimension mismatch: model expects " + std::to_string(feature_dim_) +
                          ", got " + std::to_string(x.size()));
  }
  return std::visit([&](const auto& m) { return m.predict_proba(x); }, parameters_);
}

int TrainedModel::predict(std::span<const double> x) const {
  return static_cast<int>(argmax(predict_proba(x)));
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

TrainedModel train_model(const LearnerSpec& spec, const Matrix& x, std::span<const int> y,
                         std::size_t num_classes, TrainingLog* log) {
  spec.validate();
  if (x.rows() == 0) throw InvalidArgument("cannot train on empty data");
  if (num_classes < 2) throw InvalidArgument("at least two classes are required");
  ModelParameters params = std::visit(
      Overloaded{
          [&](const DecisionTreeParams& p) -> ModelParameters {
            return train_decision_tree(x, y, num_classes, p);
          },
          [&](const SvmParams& p) -> ModelParameters { return train_svm(x, y, num_classes, p); },
          [&](const MlpParams& p) -> ModelParameters {
            MlpTrainingLog mlog;
            auto m = train_mlp(x, y, num_classes, p, spec.seed, &mlog);
            if (log) log->losses = std::move(mlog.epoch_loss);
            return m;
          },
          [&](const GbdtParams& p) -> ModelParameters {
            GbdtTrainingLog glog;
            auto m = train_gbdt(x, y, num_classes, p, spec.seed, &glog);
            if (log) log->losses = std::move(glog.round_loss);
            return m;
          },
      },
      spec.params);
  return TrainedModel(spec, x.cols(), num_classes, std::move(params));
}

namespace detail {

void encode_model_body(ByteWriter& w, const TrainedModel& model) {
  w.size(model.feature_dim());
  w.size(model.num_classes());
  for (int c : model.class_list()) w.u8(static_cast<std::uint8_t>(c));
  w.u64(model.spec().seed);
  write_params(w, model.spec().params);
  write_payload(w, model.parameters());
}

TrainedModel decode_model_body(ByteReader& r, LearnerKind kind) {
  const std::size_t dim = r.count(0);
  const std::size_t k = r.count(1);
  check(dim >= 1 && k >= 2, "dimensions");
  for (std::size_t c = 0; c < k; ++c) check(r.u8() == c, "class list");
  LearnerSpec spec;
  spec.seed = r.u64();
  spec.params = read_params(r, kind);
  auto payload = read_payload(r, kind, dim, k);
  return TrainedModel(std::move(spec), dim, k, std::move(payload));
}

}  // namespace detail

std::vector<std::uint8_t> serialize_model(const TrainedModel& model) {
  ByteWriter w;
  w.magic();
  w.u16(kModelFormatVersion);
  w.u8(static_cast<std::uint8_t>(model.kind()));
  detail::encode_model_body(w, model);
  return w.finish();
}

TrainedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  auto file = detail::open_checked(bytes, kModelFormatVersion);
  if (file.tag == detail::kEnsembleTag) {
    throw ModelFormatError("file holds an ensemble, not a single model");
  }
  if (file.tag < 1 || file.tag > 4) throw ModelFormatError("unknown model kind tag");
  auto model = detail::decode_model_body(file.body, static_cast<LearnerKind>(file.tag));
  if (file.body.remaining() != 0) throw ModelFormatError("trailing bytes in model file");
  return model;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_model(model));
}

TrainedModel load_model(const std::filesystem::path& path) {
  return deserialize_model(read_file_bytes(path));
}

}  // namespace sitpose
