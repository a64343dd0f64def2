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

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace gpwomble::linalg {

/// Throws std::invalid_argument if ||a - a^T||_max > 1e-10 ||a||_max or a has
/// non-finite entries.
void require_symmetric(const Eigen::MatrixXd& a, const char* what);

/// Cholesky factor with jitter escalation: on failure adds 1e-10 * mean(diag)
/// to the diagonal, then multiplies the jitter by 10, at most 6 retries.
class CholeskyFactor {
 public:
  static constexpr int kMaxRetries = 6;

  CholeskyFactor() = default;
  explicit CholeskyFactor(const Eigen::MatrixXd& a);

  Eigen::Index size() const { return llt_.rows(); }
  Eigen::MatrixXd lower() const { return llt_.matrixL(); }
  double jitter() const { return jitter_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return llt_.solve(b); }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const { return llt_.solve(b); }
  /// L^{-1} b.
  Eigen::MatrixXd solve_lower(const Eigen::MatrixXd& b) const;
  double log_det() const;
  /// L z.
  Eigen::VectorXd transform(const Eigen::VectorXd& z) const { return llt_.matrixL() * z; }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double jitter_ = 0.0;
};

/// Lower-triangular L with L L^T = a (after jitter when needed).
Eigen::MatrixXd cholesky(const Eigen::MatrixXd& a);

/// Reproducible normal / uniform source. The engine is seeded from the seed
/// and the full tag path, so child streams never overlap their parent in
/// practice and identical (seed, tags) always give identical sequences.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  RngStream child(std::uint64_t tag) const;
  RngStream child(std::uint64_t tag, std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }
  const std::vector<std::uint64_t>& tags() const { return tags_; }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  Eigen::VectorXd normal_vector(Eigen::Index n);
  std::mt19937_64& engine() { return engine_; }

 private:
  RngStream(std::uint64_t seed, std::vector<std::uint64_t> tags);
  void reseed();

  std::uint64_t seed_;
  std::vector<std::uint64_t> tags_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// mean + L z with cov = L L^T. A cov that is identically zero returns mean.
Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, RngStream& rng);

/// Like mvn_sample but for covariances that may be singular: uses the
/// symmetric eigen square root with negative eigenvalues clamped at zero.
Eigen::VectorXd mvn_sample_psd(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                               RngStream& rng);

/// (a + a^T)/2 with eigenvalues clamped at zero.
Eigen::MatrixXd clamp_psd(const Eigen::MatrixXd& a);

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

/// Cached n-point rule, n >= 2. Thread safe.
const GaussLegendreRule& gauss_legendre_rule(int n);

/// Integral of f over [a, b] with the n-point rule. Throws on a non-finite
/// integrand value.
template <class F>
double gauss_legendre(F&& f, double a, double b, int n = 21) {
  if (!(a <= b)) throw std::invalid_argument("gauss_legendre: require a <= b");
  if (a == b) return 0.0;
  const GaussLegendreRule& rule = gauss_legendre_rule(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = f(mid + half * rule.nodes[i]);
    if (!std::isfinite(v)) throw std::domain_error("gauss_legendre: non-finite integrand");
    sum += rule.weights[i] * v;
  }
  return half * sum;
}

/// Unnormalized lower incomplete gamma, integral_0^x t^{a-1} e^{-t} dt, for
/// integer shape a in {1, 2, 3}.
double gamma_lower(int a, double x);

double std_normal_cdf(double x);

}  // namespace gpwomble::linalg
