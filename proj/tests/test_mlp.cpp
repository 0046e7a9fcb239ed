#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "sitpose/error.hpp"
#include "sitpose/mlp.hpp"

using namespace sitpose;

namespace {

// Straightforward loop forward pass in long double: mean cross-entropy.
long double naive_loss(const MlpModel& m, const Matrix& x, std::span<const int> y) {
  long double total = 0.0L;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::vector<long double> a(x.row(r).begin(), x.row(r).end());
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      std::vector<long double> z(m.weights[l].rows());
      for (std::size_t o = 0; o < z.size(); ++o) {
        long double s = m.biases[l][o];
        for (std::size_t i = 0; i < a.size(); ++i) s += m.weights[l](o, i) * a[i];
        z[o] = (l + 1 < m.weights.size()) ? std::max(s, 0.0L) : s;
      }
      a = z;
    }
    const long double mx = *std::max_element(a.begin(), a.end());
    long double lse = 0.0L;
    for (long double v : a) lse += std::exp(v - mx);
    total += std::log(lse) + mx - a[static_cast<std::size_t>(y[r])];
  }
  return total / static_cast<long double>(x.rows());
}

struct Batch {
  Matrix x;
  std::vector<int> y;
};

Batch random_batch(std::size_t n, std::size_t d, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Batch b{Matrix(n, d), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) b.x(i, j) = g(rng);
    b.y[i] = static_cast<int>(rng() % k);
  }
  return b;
}

MlpModel randomized(std::vector<std::size_t> sizes, std::uint64_t seed) {
  MlpModel m = init_mlp(std::move(sizes), seed);
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (auto& b : m.biases)
    for (double& v : b) v = u(rng);
  return m;
}

}  // namespace

TEST_CASE("loss agrees with a naive forward pass") {
  const auto b = random_batch(5, 10, 7, 1);
  const auto m = randomized({10, 8, 7}, 2);
  const auto g = mlp_loss_and_gradient(m, b.x, b.y);
  CHECK(g.loss == doctest::Approx(static_cast<double>(naive_loss(m, b.x, b.y))).epsilon(1e-12));
  for (std::size_t i = 0; i < b.x.rows(); ++i) {
    Matrix one(1, 10);
    std::copy_n(b.x.row(i).begin(), 10, one.row(0).begin());
    const std::vector<int> yi{b.y[i]};
    const double nll = -std::log(m.predict_proba(b.x.row(i))[static_cast<std::size_t>(b.y[i])]);
    CHECK(nll == doctest::Approx(static_cast<double>(naive_loss(m, one, yi))).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  const auto b = random_batch(3, 10, 7, 3);
  MlpModel m = randomized({10, 8, 7}, 4);
  const auto g = mlp_loss_and_gradient(m, b.x, b.y);
  const double h = 1e-5;
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = mlp_loss_and_gradient(m, b.x, b.y).loss;
    param = saved - h;
    const double down = mlp_loss_and_gradient(m, b.x, b.y).loss;
    param = saved;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-8});
    worst = std::max(worst, std::abs(fd - analytic) / denom);
  };
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    for (std::size_t r = 0; r < m.weights[l].rows(); ++r)
      for (std::size_t c = 0; c < m.weights[l].cols(); ++c) check(m.weights[l](r, c), g.weights[l](r, c));
    for (std::size_t o = 0; o < m.biases[l].size(); ++o) check(m.biases[l][o], g.biases[l][o]);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("all-zero network predicts the uniform distribution") {
  const auto m = MlpModel::zeros({10, 200, 100, 25, 7});
  const auto p = m.predict_proba(std::vector<double>(10, 3.5));
  REQUIRE(p.size() == 7);
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
}

TEST_CASE("zero-epoch model still outputs a distribution") {
  const auto b = random_batch(20, 4, 3, 5);
  MlpParams p;
  p.max_epochs = 0;
  const auto m = train_mlp(b.x, b.y, 3, p, 42);
  const auto q = m.predict_proba(b.x.row(0));
  CHECK(std::accumulate(q.begin(), q.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("XOR is learned by a 2-8-2 network") {
  Matrix x(4, 2);
  const double pts[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (std::size_t i = 0; i < 4; ++i) {
    x(i, 0) = pts[i][0];
    x(i, 1) = pts[i][1];
  }
  const std::vector<int> y{0, 1, 1, 0};
  MlpParams p;
  p.hidden = {8};
  p.learning_rate = 1e-2;
  p.max_epochs = 200;
  MlpTrainingLog log;
  const auto m = train_mlp(x, y, 2, p, 42, &log);
  CHECK(log.epoch_loss.size() <= 200);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto q = m.predict_proba(x.row(i));
    CHECK((q[1] > q[0] ? 1 : 0) == y[i]);
  }
}

TEST_CASE("permuting hidden units leaves predictions unchanged") {
  const auto b = random_batch(120, 5, 3, 6);
  MlpParams p;
  p.hidden = {16, 8};
  p.max_epochs = 20;
  const auto m = train_mlp(b.x, b.y, 3, p, 7);

  std::vector<std::size_t> perm(16);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(8);
  std::shuffle(perm.begin(), perm.end(), rng);
  MlpModel q = m;
  for (std::size_t u = 0; u < 16; ++u) {
    for (std::size_t i = 0; i < 5; ++i) q.weights[0](u, i) = m.weights[0](perm[u], i);
    q.biases[0][u] = m.biases[0][perm[u]];
    for (std::size_t o = 0; o < 8; ++o) q.weights[1](o, u) = m.weights[1](o, perm[u]);
  }
  for (std::size_t i = 0; i < b.x.rows(); ++i) {
    const auto pa = m.predict_proba(b.x.row(i));
    const auto pb = q.predict_proba(b.x.row(i));
    for (std::size_t c = 0; c < 3; ++c) CHECK(pb[c] == doctest::Approx(pa[c]).epsilon(1e-12));
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto b = random_batch(100, 6, 4, 9);
  MlpParams p;
  p.hidden = {12};
  p.max_epochs = 15;
  CHECK(train_mlp(b.x, b.y, 4, p, 11) == train_mlp(b.x, b.y, 4, p, 11));
  CHECK_FALSE(train_mlp(b.x, b.y, 4, p, 11) == train_mlp(b.x, b.y, 4, p, 12));
}

TEST_CASE("a non-finite loss is reported as divergence with the epoch") {
  auto b = random_batch(10, 3, 2, 10);
  b.x(0, 0) = std::numeric_limits<double>::infinity();
  MlpParams p;
  p.hidden = {4};
  p.standardize = false;
  try {
    (void)train_mlp(b.x, b.y, 2, p, 1);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()) == "mlp diverged at epoch 1");
  }
}

TEST_CASE("parameter validation") {
  MlpParams p;
  p.hidden = {0};
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = {};
  p.learning_rate = 0.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = {};
  p.batch_size = 0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = {};
  p.beta1 = 1.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  const auto b = random_batch(4, 2, 2, 1);
  std::vector<int> bad = b.y;
  bad[0] = 5;
  CHECK_THROWS_AS(train_mlp(b.x, bad, 2, {}, 1), InvalidArgument);
}
