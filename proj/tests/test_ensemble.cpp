#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <random>
#include <vector>

#include "sitpose/ensemble.hpp"
#include "sitpose/error.hpp"

using namespace sitpose;

namespace {

const std::vector<std::vector<double>> kMembers{{0.7, 0.2, 0.1}, {0.2, 0.6, 0.2}, {0.5, 0.3, 0.2}};

struct Data {
  Matrix x;
  std::vector<int> y;
};

Data blobs(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Data d;
  for (int i = 0; i < 150; ++i) {
    const int c = i % 3;
    const std::vector<double> row{2.0 * c + g(rng), -1.5 * c + g(rng), g(rng), 0.5 * c + g(rng)};
    d.x.append_row(row);
    d.y.push_back(c);
  }
  return d;
}

std::vector<LearnerSpec> trio() {
  auto mlp = LearnerSpec::defaults(LearnerKind::Mlp);
  auto p = std::get<MlpParams>(mlp.params);
  p.hidden = {16};
  p.max_epochs = 30;
  mlp.params = p;
  return {LearnerSpec::defaults(LearnerKind::DecisionTree), LearnerSpec::defaults(LearnerKind::Svm), mlp};
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("uniform soft vote averages the members") {
  const std::vector<double> w{1, 1, 1};
  const auto v = soft_vote(kMembers, w);
  CHECK(v.label == 0);
  CHECK(v.probabilities[0] == doctest::Approx(1.4 / 3.0).epsilon(1e-14));
  CHECK(v.probabilities[1] == doctest::Approx(1.1 / 3.0).epsilon(1e-14));
  CHECK(v.probabilities[2] == doctest::Approx(0.5 / 3.0).epsilon(1e-14));
}

TEST_CASE("weighted soft vote matches hand arithmetic") {
  // (2*0.7 + 0.2 + 0.5) / 4 = 0.525, (2*0.2 + 0.6 + 0.3) / 4 = 0.325, rest 0.150.
  const std::vector<double> w{2, 1, 1};
  const auto v = soft_vote(kMembers, w);
  CHECK(v.label == 0);
  CHECK(v.probabilities[0] == doctest::Approx(0.525).epsilon(1e-14));
  CHECK(v.probabilities[1] == doctest::Approx(0.325).epsilon(1e-14));
  CHECK(v.probabilities[2] == doctest::Approx(0.150).epsilon(1e-14));
}

TEST_CASE("agreeing one-hot members give probability one") {
  const std::vector<std::vector<double>> same(3, {0.0, 0.0, 1.0, 0.0});
  const auto v = soft_vote(same, std::vector<double>{1, 2, 3});
  CHECK(v.label == 2);
  CHECK(v.probabilities[2] == 1.0);
}

TEST_CASE("soft vote ties go to the lowest class") {
  const std::vector<std::vector<double>> m{{0.5, 0.5}, {0.5, 0.5}};
  CHECK(soft_vote(m, std::vector<double>{1, 1}).label == 0);
}

TEST_CASE("weight rescaling, permutation and a single effective member") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::vector<double>> probs(4, std::vector<double>(7));
    for (auto& p : probs) {
      for (double& v : p) v = u(rng);
      const double s = std::accumulate(p.begin(), p.end(), 0.0);
      for (double& v : p) v /= s;
    }
    std::vector<double> w{u(rng), u(rng), u(rng), u(rng)};
    const auto base = soft_vote(probs, w);
    CHECK(std::accumulate(base.probabilities.begin(), base.probabilities.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> scaled = w;
    for (double& v : scaled) v *= 8.0;  // power of two keeps the ratios exact
    CHECK(bit_equal(soft_vote(probs, scaled).probabilities, base.probabilities));
    for (double& v : scaled) v *= 0.37 / 8.0;
    const auto s = soft_vote(probs, scaled);
    CHECK(s.label == base.label);
    for (std::size_t c = 0; c < 7; ++c) CHECK(s.probabilities[c] == doctest::Approx(base.probabilities[c]).epsilon(1e-13));

    std::vector<std::size_t> order{0, 1, 2, 3};
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<double>> pp;
    std::vector<double> pw;
    for (auto i : order) {
      pp.push_back(probs[i]);
      pw.push_back(w[i]);
    }
    const auto permuted = soft_vote(pp, pw);
    CHECK(permuted.label == base.label);
    CHECK(bit_equal(permuted.probabilities, base.probabilities));

    std::vector<double> single(4, 0.0);
    single[2] = u(rng);
    CHECK(bit_equal(soft_vote(probs, single).probabilities, probs[2]));
  }
}

TEST_CASE("hard vote examples") {
  CHECK(hard_vote(std::vector<int>{2, 2, 5}, std::vector<double>{1, 1, 1}, 7) == 2);
  CHECK(hard_vote(std::vector<int>{1, 2, 3}, std::vector<double>{1, 1, 1}, 7) == 1);
  CHECK(hard_vote(std::vector<int>{1, 2}, std::vector<double>{1, 3}, 7) == 2);
  CHECK(hard_vote(std::vector<int>{3, 1}, std::vector<double>{2, 2}, 7) == 1);
}

TEST_CASE("vote inputs are validated") {
  CHECK_THROWS_AS(soft_vote(kMembers, std::vector<double>{1, 1}), InvalidArgument);
  CHECK_THROWS_AS(soft_vote(kMembers, std::vector<double>{0, 0, 0}), InvalidArgument);
  CHECK_THROWS_AS(soft_vote(kMembers, std::vector<double>{1, -1, 1}), InvalidArgument);
  const std::vector<std::vector<double>> ragged{{0.5, 0.5}, {1.0}};
  CHECK_THROWS_AS(soft_vote(ragged, std::vector<double>{1, 1}), InvalidArgument);
  CHECK_THROWS_AS(hard_vote(std::vector<int>{1, 9}, std::vector<double>{1, 1}, 7), InvalidArgument);
  CHECK_THROWS_AS(hard_vote(std::vector<int>{1, 2}, std::vector<double>{1, -1}, 7), InvalidArgument);
}

TEST_CASE("trained ensemble: voting modes, member checks, serialization") {
  const auto d = blobs(2);
  const auto specs = trio();
  const auto soft = train_ensemble(specs, d.x, d.y, 3);
  CHECK(soft.weights() == std::vector<double>{1, 1, 1});
  CHECK(soft.members().size() == 3);

  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.x.rows(); ++i) {
    const auto v = soft.vote_soft(d.x.row(i));
    std::vector<std::vector<double>> probs;
    for (const auto& m : soft.members()) probs.push_back(m.predict_proba(d.x.row(i)));
    CHECK(bit_equal(v.probabilities, soft_vote(probs, soft.weights()).probabilities));
    CHECK(soft.predict(d.x.row(i)) == v.label);
    correct += v.label == d.y[i];
  }
  CHECK(correct >= 140);

  const TrainedEnsemble hard(soft.members(), {1, 2, 1}, VotingMode::Hard);
  for (std::size_t i = 0; i < 20; ++i) {
    std::vector<int> labels;
    for (const auto& m : hard.members()) labels.push_back(m.predict(d.x.row(i)));
    CHECK(hard.predict(d.x.row(i)) == hard_vote(labels, hard.weights(), 3));
  }

  CHECK_THROWS_AS(TrainedEnsemble({soft.members()[0]}, {1}), InvalidArgument);
  Matrix x5;
  for (std::size_t i = 0; i < d.x.rows(); ++i) {
    std::vector<double> row(d.x.row(i).begin(), d.x.row(i).end());
    row.push_back(0.0);
    x5.append_row(row);
  }
  const auto other = train_model(specs[0], x5, d.y, 3);
  CHECK_THROWS_AS(TrainedEnsemble({soft.members()[0], other}, {1, 1}), InvalidArgument);
  const auto four_class = train_model(specs[0], d.x, d.y, 4);
  CHECK_THROWS_AS(TrainedEnsemble({soft.members()[0], four_class}, {1, 1}), InvalidArgument);

  const auto bytes = serialize_ensemble(hard);
  CHECK(is_ensemble_file(bytes));
  CHECK_FALSE(is_ensemble_file(serialize_model(soft.members()[0])));
  const auto back = deserialize_ensemble(bytes);
  CHECK(back.mode() == VotingMode::Hard);
  CHECK(back.weights() == hard.weights());
  const auto path = std::filesystem::temp_directory_path() / "sitpose_test_ensemble.bin";
  save_ensemble(soft, path);
  const auto loaded = load_ensemble(path);
  std::filesystem::remove(path);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    const std::vector<double> q{g(rng), g(rng), g(rng), g(rng)};
    CHECK(bit_equal(loaded.vote_soft(q).probabilities, soft.vote_soft(q).probabilities));
    CHECK(back.predict(q) == hard.predict(q));
  }

  auto broken = bytes;
  broken[0] = 'Z';
  CHECK_THROWS_AS(deserialize_ensemble(broken), ModelFormatError);
  broken = bytes;
  broken[bytes.size() - 10] ^= 1;
  CHECK_THROWS_AS(deserialize_ensemble(broken), ModelFormatError);
  CHECK_THROWS_AS(deserialize_model(bytes), ModelFormatError);
}
