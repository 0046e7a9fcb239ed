#include "sitpose/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <string>
#include <unordered_map>

#include "sitpose/error.hpp"

namespace sitpose {

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinPairProb = 1e-7;

// LRU cache of kernel matrix rows.
class KernelRows {
 public:
  KernelRows(const Matrix& x, const PolynomialKernel& kernel, double cache_mb)
      : x_(x), kernel_(kernel) {
    const double row_bytes = static_cast<double>(x.rows()) * sizeof(double);
    capacity_ = std::max<std::size_t>(2, static_cast<std::size_t>(cache_mb * 1024 * 1024 / row_bytes));
    diag_.resize(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) diag_[i] = kernel_(x.row(i), x.row(i));
  }

  const std::vector<double>& row(std::size_t i) {
    if (auto it = index_.find(i); it != index_.end()) {
      order_.splice(order_.begin(), order_, it->second);
      return it->second->values;
    }
    if (order_.size() >= capacity_) {
      index_.erase(order_.back().row);
      order_.pop_back();
    }
    Entry e{i, std::vector<double>(x_.rows())};
    const auto xi = x_.row(i);
    for (std::size_t j = 0; j < x_.rows(); ++j) e.values[j] = kernel_(xi, x_.row(j));
    order_.push_front(std::move(e));
    index_[i] = order_.begin();
    return order_.front().values;
  }

  double diag(std::size_t i) const { return diag_[i]; }

 private:
  struct Entry {
    std::size_t row;
    std::vector<double> values;
  };
  const Matrix& x_;
  PolynomialKernel kernel_;
  std::size_t capacity_ = 0;
  std::vector<double> diag_;
  std::list<Entry> order_;
  std::unordered_map<std::size_t, std::list<Entry>::iterator> index_;
};

double sigmoid_objective(std::span<const double> f, std::span<const double> t, double a, double b) {
  double value = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double z = f[i] * a + b;
    value += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
  }
  return value;
}

}  // namespace

void SvmParams::validate() const {
  if (degree < 1) throw InvalidArgument("svm degree must be >= 1");
  if (!(c_penalty > 0.0)) throw InvalidArgument("svm C must be positive");
  if (!(tol > 0.0)) throw InvalidArgument("svm tol must be positive");
  if (max_iterations < 1) throw InvalidArgument("svm max_iterations must be >= 1");
  if (gamma < 0.0) throw InvalidArgument("svm gamma must be >= 0");
  if (!(cache_mb > 0.0)) throw InvalidArgument("svm cache size must be positive");
}

double PolynomialKernel::operator()(std::span<const double> a, std::span<const double> b) const {
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  const double base = gamma * dot + coef0;
  double out = 1.0;
  for (int d = 0; d < degree; ++d) out *= base;
  return out;
}

BinarySvmSolution solve_binary_svm(const Matrix& x, std::span<const int> y,
                                   const PolynomialKernel& kernel, const SvmParams& params) {
  params.validate();
  const std::size_t n = x.rows();
  if (y.size() != n) throw InvalidArgument("svm: label count mismatch");
  for (int v : y) {
    if (v != 1 && v != -1) throw InvalidArgument("svm: binary labels must be +1 or -1");
  }
  const double c = params.c_penalty;
  KernelRows rows(x, kernel, params.cache_mb);

  BinarySvmSolution sol;
  sol.alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of 0.5 a'Qa - e'a
  auto& alpha = sol.alpha;
  auto upper = [&](std::size_t t) { return alpha[t] >= c; };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  for (;;) {
    // Maximal violating pair with second-order selection of j.
    double gmax = -kInf, gmax2 = -kInf;
    std::ptrdiff_t i_sel = -1, j_sel = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] == 1) {
        if (!upper(t) && -grad[t] >= gmax) { gmax = -grad[t]; i_sel = static_cast<std::ptrdiff_t>(t); }
      } else {
        if (!lower(t) && grad[t] >= gmax) { gmax = grad[t]; i_sel = static_cast<std::ptrdiff_t>(t); }
      }
    }
    double best_obj = kInf;
    if (i_sel >= 0) {
      const auto i = static_cast<std::size_t>(i_sel);
      const auto& ki = rows.row(i);
      for (std::size_t t = 0; t < n; ++t) {
        const double q_it = y[i] * y[t] * ki[t];
        if (y[t] == 1) {
          if (lower(t)) continue;
          gmax2 = std::max(gmax2, grad[t]);
          const double diff = gmax + grad[t];
          if (diff > 0) {
            double quad = rows.diag(i) + rows.diag(t) - 2.0 * y[i] * q_it;
            if (quad <= 0) quad = kTau;
            const double obj = -(diff * diff) / quad;
            if (obj <= best_obj) { best_obj = obj; j_sel = static_cast<std::ptrdiff_t>(t); }
          }
        } else {
          if (upper(t)) continue;
          gmax2 = std::max(gmax2, -grad[t]);
          const double diff = gmax - grad[t];
          if (diff > 0) {
            double quad = rows.diag(i) + rows.diag(t) + 2.0 * y[i] * q_it;
            if (quad <= 0) quad = kTau;
            const double obj = -(diff * diff) / quad;
            if (obj <= best_obj) { best_obj = obj; j_sel = static_cast<std::ptrdiff_t>(t); }
          }
        }
      }
    }
    sol.kkt_violation = std::max(0.0, gmax + gmax2);
    if (gmax + gmax2 < params.tol || j_sel < 0) break;
    if (sol.iterations >= params.max_iterations) {
      throw TrainingError("svm did not converge after " + std::to_string(sol.iterations) +
                          " iterations; worst KKT violation " + std::to_string(sol.kkt_violation));
    }
    ++sol.iterations;

    const auto i = static_cast<std::size_t>(i_sel);
    const auto j = static_cast<std::size_t>(j_sel);
    const std::vector<double> ki = rows.row(i);
    const auto& kj = rows.row(j);
    const double qii = rows.diag(i), qjj = rows.diag(j), qij = y[i] * y[j] * ki[j];
    const double old_i = alpha[i], old_j = alpha[j];

    if (y[i] != y[j]) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
      }
      if (diff > 0) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = c - diff; }
      } else {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = c + diff; }
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = sum - c; }
      } else {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
      }
      if (sum > c) {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = sum - c; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
      }
    }

    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
    }
  }

  // Bias from free vectors, or the midpoint of the feasible interval.
  double ub = kInf, lb = -kInf, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  sol.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  return sol;
}

double PlattSigmoid::operator()(double f) const {
  const double z = f * a + b;
  return z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
}

PlattSigmoid fit_platt(std::span<const double> f, std::span<const int> y) {
  double prior1 = 0, prior0 = 0;
  for (int v : y) (v > 0 ? prior1 : prior0) += 1.0;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo = 1.0 / (prior0 + 2.0);
  std::vector<double> t(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) t[i] = y[i] > 0 ? hi : lo;

  constexpr int kMaxIter = 100;
  constexpr double kMinStep = 1e-10, kSigma = 1e-12, kEps = 1e-5;
  double a = 0.0, b = std::log((prior0 + 1.0) / (prior1 + 1.0));
  double fval = sigmoid_objective(f, t, a, b);

  for (int iter = 0; iter < kMaxIter; ++iter) {
    double h11 = kSigma, h22 = kSigma, h21 = 0, g1 = 0, g2 = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double z = f[i] * a + b;
      double p, q;
      if (z >= 0) {
        p = std::exp(-z) / (1.0 + std::exp(-z));
        q = 1.0 / (1.0 + std::exp(-z));
      } else {
        p = 1.0 / (1.0 + std::exp(z));
        q = std::exp(z) / (1.0 + std::exp(z));
      }
      const double d2 = p * q;
      h11 += f[i] * f[i] * d2;
      h22 += d2;
      h21 += f[i] * d2;
      const double d1 = t[i] - p;
      g1 += f[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < kEps && std::abs(g2) < kEps) break;
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    while (step >= kMinStep) {
      const double na = a + step * da, nb = b + step * db;
      const double nf = sigmoid_objective(f, t, na, nb);
      if (nf < fval + 1e-4 * step * gd) {
        a = na;
        b = nb;
        fval = nf;
        break;
      }
      step /= 2.0;
    }
    if (step < kMinStep) break;
  }
  return {a, b};
}

std::vector<double> couple_pairwise(const Matrix& r) {
  const std::size_t k = r.rows();
  std::vector<double> p(k, 1.0 / static_cast<double>(k));
  if (k == 1) return p;
  Matrix q(k, k);
  for (std::size_t t = 0; t < k; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      if (j == t) continue;
      q(t, t) += r(j, t) * r(j, t);
      q(t, j) = -r(j, t) * r(t, j);
    }
  }
  std::vector<double> qp(k);
  const int max_iter = std::max<int>(1000, static_cast<int>(k));
  const double eps = 1e-10;
  for (int iter = 0; iter < max_iter; ++iter) {
    double pqp = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
      qp[t] = 0.0;
      for (std::size_t j = 0; j < k; ++j) qp[t] += q(t, j) * p[j];
      pqp += p[t] * qp[t];
    }
    double max_error = 0.0;
    for (std::size_t t = 0; t < k; ++t) max_error = std::max(max_error, std::abs(qp[t] - pqp));
    if (max_error < eps) break;
    for (std::size_t t = 0; t < k; ++t) {
      const double diff = (-qp[t] + pqp) / q(t, t);
      p[t] += diff;
      pqp = (pqp + diff * (diff * q(t, t) + 2.0 * qp[t])) / (1.0 + diff) / (1.0 + diff);
      for (std::size_t j = 0; j < k; ++j) {
        qp[j] = (qp[j] + diff * q(t, j)) / (1.0 + diff);
        p[j] /= (1.0 + diff);
      }
    }
  }
  double total = 0.0;
  for (double& v : p) {
    v = std::max(v, 0.0);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> SvmModel::decision_values(std::span<const double> x_raw) const {
  const auto x = scaler.apply(x_raw);
  std::vector<double> kx(support_vectors.rows());
  for (std::size_t s = 0; s < kx.size(); ++s) kx[s] = kernel(support_vectors.row(s), x);
  std::vector<double> out;
  out.reserve(machines.size());
  for (const auto& m : machines) {
    double d = -m.rho;
    for (std::size_t t = 0; t < m.sv_index.size(); ++t) d += m.coef[t] * kx[m.sv_index[t]];
    out.push_back(d);
  }
  return out;
}

std::vector<double> SvmModel::predict_proba(std::span<const double> x) const {
  std::vector<double> p(num_classes, 0.0);
  const std::size_t k = present_classes.size();
  if (k == 1) {
    p[static_cast<std::size_t>(present_classes[0])] = 1.0;
    return p;
  }
  std::vector<std::size_t> slot(num_classes, 0);
  for (std::size_t i = 0; i < k; ++i) slot[static_cast<std::size_t>(present_classes[i])] = i;

  const auto dec = decision_values(x);
  Matrix r(k, k);
  for (std::size_t m = 0; m < machines.size(); ++m) {
    const auto& mach = machines[m];
    const double prob = std::clamp(mach.sigmoid(dec[m]), kMinPairProb, 1.0 - kMinPairProb);
    const auto a = slot[static_cast<std::size_t>(mach.positive_class)];
    const auto b = slot[static_cast<std::size_t>(mach.negative_class)];
    r(a, b) = prob;
    r(b, a) = 1.0 - prob;
  }
  const auto coupled = couple_pairwise(r);
  for (std::size_t i = 0; i < k; ++i) p[static_cast<std::size_t>(present_classes[i])] = coupled[i];
  return p;
}

SvmModel train_svm(const Matrix& x_raw, std::span<const int> y, std::size_t num_classes,
                   const SvmParams& params) {
  params.validate();
  if (x_raw.rows() == 0) throw InvalidArgument("svm: empty training data");
  if (y.size() != x_raw.rows()) throw InvalidArgument("svm: label count mismatch");

  SvmModel model;
  if (params.standardize) model.scaler = FeatureScaler::fit(x_raw);
  const Matrix x = model.scaler.apply(x_raw);
  model.num_classes = num_classes;
  model.kernel = {params.gamma > 0.0 ? params.gamma : 1.0 / static_cast<double>(x.cols()),
                  params.coef0, params.degree};

  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= num_classes) {
      throw InvalidArgument("svm: label out of range");
    }
    by_class[static_cast<std::size_t>(y[i])].push_back(i);
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (!by_class[c].empty()) model.present_classes.push_back(static_cast<int>(c));
  }
  if (model.present_classes.size() < 2) throw InvalidArgument("svm: at least two classes required");

  std::vector<std::int64_t> sv_of_row(x.rows(), -1);
  std::vector<std::size_t> sv_rows;

  for (std::size_t a = 0; a < model.present_classes.size(); ++a) {
    for (std::size_t b = a + 1; b < model.present_classes.size(); ++b) {
      const auto ca = static_cast<std::size_t>(model.present_classes[a]);
      const auto cb = static_cast<std::size_t>(model.present_classes[b]);
      std::vector<std::size_t> rows = by_class[ca];
      rows.insert(rows.end(), by_class[cb].begin(), by_class[cb].end());
      std::sort(rows.begin(), rows.end());

      Matrix sub(rows.size(), x.cols());
      std::vector<int> ys(rows.size());
      for (std::size_t t = 0; t < rows.size(); ++t) {
        std::copy_n(x.row(rows[t]).begin(), x.cols(), sub.row(t).begin());
        ys[t] = static_cast<std::size_t>(y[rows[t]]) == ca ? 1 : -1;
      }
      const auto sol = solve_binary_svm(sub, ys, model.kernel, params);

      SvmPairMachine m;
      m.positive_class = static_cast<int>(ca);
      m.negative_class = static_cast<int>(cb);
      m.rho = sol.rho;
      for (std::size_t t = 0; t < rows.size(); ++t) {
        if (sol.alpha[t] <= 0.0) continue;
        auto& sv = sv_of_row[rows[t]];
        if (sv < 0) {
          sv = static_cast<std::int64_t>(sv_rows.size());
          sv_rows.push_back(rows[t]);
        }
        m.sv_index.push_back(static_cast<std::uint32_t>(sv));
        m.coef.push_back(sol.alpha[t] * ys[t]);
      }

      // Platt scaling on the training decision values.
      std::vector<double> dec(rows.size(), 0.0);
      for (std::size_t t = 0; t < rows.size(); ++t) {
        double d = -m.rho;
        for (std::size_t s = 0; s < m.sv_index.size(); ++s) {
          d += m.coef[s] * model.kernel(x.row(sv_rows[m.sv_index[s]]), sub.row(t));
        }
        dec[t] = d;
      }
      m.sigmoid = fit_platt(dec, ys);
      model.machines.push_back(std::move(m));
    }
  }

  model.support_vectors = Matrix(sv_rows.size(), x.cols());
  for (std::size_t s = 0; s < sv_rows.size(); ++s) {
    std::copy_n(x.row(sv_rows[s]).begin(), x.cols(), model.support_vectors.row(s).begin());
  }
  return model;
}

}  // namespace sitpose
