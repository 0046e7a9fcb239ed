#include "sitpose/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "binary_io.hpp"
#include "sitpose/error.hpp"

namespace sitpose {

namespace {

double order_free_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

}  // namespace

SoftVote soft_vote(std::span<const std::vector<double>> member_probs, std::span<const double> weights) {
  if (member_probs.empty()) throw InvalidArgument("soft vote needs at least one member");
  if (weights.size() != member_probs.size()) throw InvalidArgument("one weight per member required");
  const std::size_t k = member_probs.front().size();
  SoftVote vote;
  vote.probabilities.assign(k, 0.0);
  for (std::size_t m = 0; m < member_probs.size(); ++m) {
    if (member_probs[m].size() != k) throw InvalidArgument("member class-list mismatch");
    if (!(weights[m] >= 0.0)) throw InvalidArgument("voting weights must be non-negative");
  }
  const double total = order_free_sum(std::vector<double>(weights.begin(), weights.end()));
  if (!(total > 0.0)) throw InvalidArgument("voting weights must sum to a positive value");
  // Weights are normalized first so a single effective member is reproduced
  // exactly; sorted summation makes the result independent of member order.
  std::vector<double> terms;
  for (std::size_t c = 0; c < k; ++c) {
    terms.clear();
    for (std::size_t m = 0; m < member_probs.size(); ++m) {
      if (weights[m] != 0.0) terms.push_back(weights[m] / total * member_probs[m][c]);
    }
    vote.probabilities[c] = order_free_sum(terms);
  }
  vote.label = static_cast<int>(argmax(vote.probabilities));
  return vote;
}

int hard_vote(std::span<const int> member_labels, std::span<const double> weights,
              std::size_t num_classes) {
  if (weights.size() != member_labels.size()) throw InvalidArgument("one weight per member required");
  std::vector<std::vector<double>> shares(num_classes);
  for (std::size_t m = 0; m < member_labels.size(); ++m) {
    const int c = member_labels[m];
    if (c < 0 || static_cast<std::size_t>(c) >= num_classes) throw InvalidArgument("vote out of range");
    if (!(weights[m] >= 0.0)) throw InvalidArgument("voting weights must be non-negative");
    shares[static_cast<std::size_t>(c)].push_back(weights[m]);
  }
  std::vector<double> tally(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) tally[c] = order_free_sum(shares[c]);
  return static_cast<int>(argmax(tally));
}

TrainedEnsemble::TrainedEnsemble(std::vector<TrainedModel> members, std::vector<double> weights,
                                 VotingMode mode)
    : members_(std::move(members)), weights_(std::move(weights)), mode_(mode) {
  if (members_.size() < 2) throw InvalidArgument("an ensemble needs at least two members");
  if (weights_.empty()) weights_.assign(members_.size(), 1.0);
  if (weights_.size() != members_.size()) throw InvalidArgument("one weight per member required");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("voting weights must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw InvalidArgument("voting weights must sum to a positive value");
  for (const auto& m : members_) {
    if (m.num_classes() != members_.front().num_classes()) {
      throw InvalidArgument("member class-list mismatch");
    }
    if (m.feature_dim() != members_.front().feature_dim()) {
      throw InvalidArgument("member feature dimension mismatch");
    }
  }
}

SoftVote TrainedEnsemble::vote_soft(std::span<const double> x) const {
  std::vector<std::vector<double>> probs;
  probs.reserve(members_.size());
  for (std::size_t m = 0; m < members_.size(); ++m) {
    probs.push_back(weights_[m] > 0.0 ? members_[m].predict_proba(x)
                                      : std::vector<double>(num_classes(), 0.0));
  }
  return soft_vote(probs, weights_);
}

int TrainedEnsemble::vote_hard(std::span<const double> x) const {
  std::vector<int> labels;
  labels.reserve(members_.size());
  for (const auto& m : members_) labels.push_back(m.predict(x));
  return hard_vote(labels, weights_, num_classes());
}

int TrainedEnsemble::predict(std::span<const double> x) const {
  return mode_ == VotingMode::Soft ? vote_soft(x).label : vote_hard(x);
}

TrainedEnsemble train_ensemble(std::span<const LearnerSpec> specs, const Matrix& x,
                               std::span<const int> y, std::size_t num_classes,
                               std::vector<double> weights, VotingMode mode) {
  std::vector<TrainedModel> members;
  members.reserve(specs.size());
  for (const auto& spec : specs) members.push_back(train_model(spec, x, y, num_classes));
  return TrainedEnsemble(std::move(members), std::move(weights), mode);
}

std::vector<std::uint8_t> serialize_ensemble(const TrainedEnsemble& ensemble) {
  detail::ByteWriter w;
  w.magic();
  w.u16(kModelFormatVersion);
  w.u8(detail::kEnsembleTag);
  w.u8(static_cast<std::uint8_t>(ensemble.mode()));
  w.size(ensemble.members().size());
  for (std::size_t m = 0; m < ensemble.members().size(); ++m) {
    w.f64(ensemble.weights()[m]);
    const auto bytes = serialize_model(ensemble.members()[m]);
    w.size(bytes.size());
    w.bytes(bytes);
  }
  return w.finish();
}

bool is_ensemble_file(std::span<const std::uint8_t> bytes) {
  return detail::open_checked(bytes, kModelFormatVersion).tag == detail::kEnsembleTag;
}

TrainedEnsemble deserialize_ensemble(std::span<const std::uint8_t> bytes) {
  auto file = detail::open_checked(bytes, kModelFormatVersion);
  if (file.tag != detail::kEnsembleTag) throw ModelFormatError("file holds a single model, not an ensemble");
  auto& r = file.body;
  const std::uint8_t mode = r.u8();
  if (mode > 1) throw ModelFormatError("invalid voting mode");
  const std::size_t n = r.count(16);
  std::vector<TrainedModel> members;
  std::vector<double> weights;
  for (std::size_t m = 0; m < n; ++m) {
    weights.push_back(r.f64());
    const std::size_t len = r.count(1);
    members.push_back(deserialize_model(r.take(len)));
  }
  if (r.remaining() != 0) throw ModelFormatError("trailing bytes in ensemble file");
  try {
    return TrainedEnsemble(std::move(members), std::move(weights), static_cast<VotingMode>(mode));
  } catch (const InvalidArgument& e) {
    throw ModelFormatError(std::string("invalid ensemble: ") + e.what());
  }
}

void save_ensemble(const TrainedEnsemble& ensemble, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_ensemble(ensemble));
}

TrainedEnsemble load_ensemble(const std::filesystem::path& path) {
  return deserialize_ensemble(read_file_bytes(path));
}

}  // namespace sitpose
