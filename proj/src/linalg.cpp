// Copyright 2026 The gpwomble Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gpwomble/linalg.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "gpwomble/errors.hpp"

namespace gpwomble::linalg {

void require_symmetric(const Eigen::MatrixXd& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument(std::string(what) + ": matrix is not square");
  }
  if (!a.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": matrix has non-finite entries");
  }
  const double scale = a.cwiseAbs().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (a.size() > 0 && asym > 1e-10 * scale) {
    throw std::invalid_argument(std::string(what) + ": matrix is not symmetric");
  }
}

CholeskyFactor::CholeskyFactor(const Eigen::MatrixXd& a) {
  require_symmetric(a, "cholesky");
  llt_.compute(a);
  if (llt_.info() == Eigen::Success) return;

  const double mean_diag = a.rows() > 0 ? a.diagonal().mean() : 0.0;
  double jitter = 1e-10 * (mean_diag > 0.0 ? mean_diag : 1.0);
  for (int attempt = 0; attempt < kMaxRetries; ++attempt, jitter *= 10.0) {
    Eigen::MatrixXd b = a;
    b.diagonal().array() += jitter;
    llt_.compute(b);
    if (llt_.info() == Eigen::Success) {
      jitter_ = jitter;
      return;
    }
  }
  const double attempted = jitter / 10.0;
  throw FactorizationError("cholesky: matrix not positive definite (jitter up to " +
                               std::to_string(attempted) + ")",
                           attempted);
}

Eigen::MatrixXd CholeskyFactor::solve_lower(const Eigen::MatrixXd& b) const {
  return llt_.matrixL().solve(b);
}

double CholeskyFactor::log_det() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Eigen::MatrixXd cholesky(const Eigen::MatrixXd& a) { return CholeskyFactor(a).lower(); }

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), tags_{stream} {
  reseed();
}

RngStream::RngStream(std::uint64_t seed, std::vector<std::uint64_t> tags)
    : seed_(seed), tags_(std::move(tags)) {
  reseed();
}

void RngStream::reseed() {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * tags_.size());
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed_);
  for (std::uint64_t t : tags_) push(t);
  std::seed_seq seq(words.begin(), words.end());
  engine_.seed(seq);
  normal_.reset();
}

RngStream RngStream::child(std::uint64_t tag) const {
  std::vector<std::uint64_t> t = tags_;
  t.push_back(tag);
  return RngStream(seed_, std::move(t));
}

RngStream RngStream::child(std::uint64_t tag, std::uint64_t index) const {
  std::vector<std::uint64_t> t = tags_;
  t.push_back(tag);
  t.push_back(index);
  return RngStream(seed_, std::move(t));
}

Eigen::VectorXd RngStream::normal_vector(Eigen::Index n) {
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = normal_(engine_);
  return z;
}

Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, RngStream& rng) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw std::invalid_argument("mvn_sample: dimension mismatch");
  }
  if (cov.isZero(0.0)) return mean;
  const CholeskyFactor chol(cov);
  return mean + chol.transform(rng.normal_vector(mean.size()));
}

Eigen::MatrixXd clamp_psd(const Eigen::MatrixXd& a) {
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Eigen::VectorXd lambda = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::VectorXd mvn_sample_psd(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                               RngStream& rng) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw std::invalid_argument("mvn_sample_psd: dimension mismatch");
  }
  if (!cov.allFinite()) throw std::invalid_argument("mvn_sample_psd: non-finite covariance");
  const Eigen::VectorXd z = rng.normal_vector(mean.size());
  if (cov.isZero(0.0)) return mean;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (cov + cov.transpose()));
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return mean + es.eigenvectors() * root.asDiagonal() * z;
}

namespace {

GaussLegendreRule build_rule(int n) {
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node for the weight.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussLegendreRule& gauss_legendre_rule(int n) {
  if (n < 2) throw std::invalid_argument("gauss_legendre: need at least 2 nodes");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussLegendreRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussLegendreRule>(build_rule(n));
  return *slot;
}

namespace {

// x^a e^{-x} sum_k x^k / (a (a+1) ... (a+k)), fine for small x.
double gamma_lower_series(int a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= x / (a + k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return std::pow(x, a) * std::exp(-x) * sum;
}

}  // namespace

double gamma_lower(int a, double x) {
  if (a < 1 || a > 3) throw std::invalid_argument("gamma_lower: shape must be 1, 2 or 3");
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw std::invalid_argument("gamma_lower: x must be finite and non-negative");
  }
  if (x == 0.0) return 0.0;
  if (a == 1) return -std::expm1(-x);
  if (x < 1.0) return gamma_lower_series(a, x);
  const double e = std::exp(-x);
  if (a == 2) return 1.0 - (1.0 + x) * e;
  return 2.0 - (x * x + 2.0 * x + 2.0) * e;
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace gpwomble::linalg
