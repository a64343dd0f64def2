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

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "gpwomble/kernel.hpp"
#include "gpwomble/linalg.hpp"
#include "gpwomble/stats.hpp"

namespace gpwomble::model {

struct SpatialDataset {
  Eigen::MatrixXd coords;  // N x 2
  Eigen::VectorXd y;
  Eigen::MatrixXd design;  // N x p, p = 0 means a zero mean

  Eigen::Index size() const { return y.size(); }
  Eigen::Index num_covariates() const { return design.cols(); }
  Point site(Eigen::Index i) const { return coords.row(i).transpose(); }
};

/// Builds a dataset with an intercept-only design and validates it.
SpatialDataset make_dataset(Eigen::MatrixXd coords, Eigen::VectorXd y);
SpatialDataset make_dataset(Eigen::MatrixXd coords, Eigen::VectorXd y, Eigen::MatrixXd design);

/// N >= 3, matching shapes, finite values, no two sites closer than 1e-9 and a
/// design of full column rank. Throws std::invalid_argument.
void validate(const SpatialDataset& data);

struct ThetaDraw {
  double sigma2 = 1.0;
  double phi = 1.0;
  double tau2 = 1.0;
};

/// phi ~ U(0, phi_max), sigma2 ~ IG(shape, rate), tau2 ~ IG(shape, rate).
struct Priors {
  double phi_max = 10.0;
  double sigma2_shape = 1.0;
  double sigma2_rate = 1.0;
  double tau2_shape = 2.0;
  double tau2_rate = 1.0;
};

struct McmcConfig {
  int iterations = 10000;
  int burn_in = 5000;
  int thin = 1;
  std::uint64_t seed = 1;
  double target_acceptance = 0.44;
  double adaptation_exponent = 0.6;  // Robbins-Monro gain (t + 1)^-exponent
  double initial_step = 0.5;         // proposal sd on the transformed scale
  int max_stalled_iterations = 1000;
  Priors priors;
};

/// Throws std::invalid_argument on an inconsistent configuration.
void validate(const McmcConfig& config);

struct LogPosteriorTerms {
  double log_prior_phi = 0.0;
  double log_prior_sigma2 = 0.0;
  double log_prior_tau2 = 0.0;
  double log_likelihood = 0.0;

  double total() const { return log_prior_phi + log_prior_sigma2 + log_prior_tau2 + log_likelihood; }
};

/// R(phi)_{ij} = K(||s_i - s_j||) with unit variance.
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& coords, kernel::Family family, double phi);

/// y - X (X^T X)^{-1} X^T y; y itself when the design is empty.
Eigen::VectorXd working_response(const SpatialDataset& data);

double log_inverse_gamma(double x, double shape, double rate);

/// Decomposed log density at theta for the working response y_c. Out of the
/// prior support every term that is undefined is -inf. A covariance that cannot
/// be factored gives log_likelihood = -inf and a logged warning.
LogPosteriorTerms log_collapsed_posterior_terms(const ThetaDraw& theta, const Eigen::MatrixXd& coords,
                                                const Eigen::VectorXd& y_c, kernel::Family family,
                                                const Priors& priors = {});
double log_collapsed_posterior(const ThetaDraw& theta, const Eigen::MatrixXd& coords,
                               const Eigen::VectorXd& y_c, kernel::Family family,
                               const Priors& priors = {});
double log_collapsed_posterior(const ThetaDraw& theta, const SpatialDataset& data,
                               kernel::Family family, const Priors& priors = {});

struct ThetaSummary {
  stats::IntervalSummary sigma2;
  stats::IntervalSummary phi;
  stats::IntervalSummary tau2;
};

/// Requires at least two draws.
ThetaSummary summarize_chain(const std::vector<ThetaDraw>& chain);

struct FitResult {
  std::vector<ThetaDraw> chain;  // retained draws
  std::vector<int> iteration;    // 1-based iteration index of each retained draw
  ThetaSummary summary;          // empty-chain safe: filled only when >= 2 draws
  std::array<double, 3> acceptance{};  // sigma2, phi, tau2 after adaptation
  ThetaDraw initial;
};

/// Adaptive random-walk Metropolis over (log sigma2, logit(phi / phi_max),
/// log tau2), one block per parameter. Step sizes adapt toward the target
/// acceptance during burn-in and are frozen afterwards. Throws McmcDivergence
/// when every proposal is rejected for max_stalled_iterations in a row.
FitResult fit_theta(const SpatialDataset& data, kernel::Family family, const McmcConfig& config,
                    linalg::RngStream& rng);

struct PosteriorMeta {
  kernel::Family family = kernel::Family::matern52;
  McmcConfig config;
};

/// Index-aligned posterior draws: theta[m], z.row(m) and beta.row(m) belong
/// together.
struct PosteriorDraws {
  std::vector<ThetaDraw> theta;
  std::vector<int> iteration;
  Eigen::MatrixXd z;     // M x N
  Eigen::MatrixXd beta;  // M x p
  PosteriorMeta meta;

  Eigen::Index size() const { return static_cast<Eigen::Index>(theta.size()); }
  bool has_latent() const { return z.rows() == size() && size() > 0; }
};

/// Moments of (beta, Z) given y and theta under a flat prior on beta, stacked
/// as [beta; Z].
struct ZBetaMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};
ZBetaMoments zbeta_joint_moments(const SpatialDataset& data, const ThetaDraw& theta,
                                 kernel::Family family);

/// One (beta, Z) draw per theta draw by composition: beta | y, theta, then
/// Z | y, beta, theta. Draw m uses the child stream (2, m) of rng so the
/// result does not depend on thread count.
PosteriorDraws sample_z_beta(const SpatialDataset& data, const FitResult& fit, kernel::Family family,
                             const McmcConfig& config, const linalg::RngStream& rng);
PosteriorDraws sample_z_beta(const SpatialDataset& data, const std::vector<ThetaDraw>& chain,
                             kernel::Family family, const linalg::RngStream& rng);

}  // namespace gpwomble::model
