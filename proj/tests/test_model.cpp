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

#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "gpwomble/errors.hpp"
#include "gpwomble/model.hpp"
#include "gpwomble/stats.hpp"
#include "support.hpp"

namespace gpwomble {
namespace {

using kernel::Family;
using model::McmcConfig;
using model::ThetaDraw;

model::SpatialDataset small_dataset() {
  Eigen::MatrixXd c(4, 2);
  c << 0, 0, 1, 0, 0, 1.5, 2, 2;
  Eigen::VectorXd y(4);
  y << 1.0, 2.0, 0.5, 3.0;
  return model::make_dataset(c, y);
}

TEST(Dataset, Validation) {
  EXPECT_NO_THROW(model::validate(small_dataset()));
  Eigen::MatrixXd c(3, 2);
  c << 0, 0, 1, 1, 1, 1;
  EXPECT_THROW(model::validate(model::make_dataset(c, Eigen::Vector3d(1, 2, 3))), std::invalid_argument);
  Eigen::MatrixXd c2(2, 2);
  c2 << 0, 0, 1, 1;
  EXPECT_THROW(model::validate(model::make_dataset(c2, Eigen::Vector2d(1, 2))), std::invalid_argument);
  auto d = small_dataset();
  d.y(2) = NAN;
  EXPECT_THROW(model::validate(d), std::invalid_argument);
}

TEST(Config, Validation) {
  McmcConfig c;
  EXPECT_NO_THROW(model::validate(c));
  c.burn_in = c.iterations;
  EXPECT_THROW(model::validate(c), std::invalid_argument);
  c = {};
  c.thin = 0;
  EXPECT_THROW(model::validate(c), std::invalid_argument);
}

TEST(LogPosterior, PhiOutsidePriorSupport) {
  const auto d = small_dataset();
  EXPECT_EQ(model::log_collapsed_posterior({1.0, 11.0, 1.0}, d, Family::matern52),
            -std::numeric_limits<double>::infinity());
}

TEST(LogPosterior, TwoSiteHandOracle) {
  Eigen::MatrixXd c(2, 2);
  c << 0, 0, 0.6, 0.8;  // distance 1
  const Eigen::Vector2d y(0.7, -0.4);
  const ThetaDraw th{2.0, 1.5, 0.3};
  const double a = std::sqrt(5.0) * th.phi;
  const double rho = (1 + a + a * a / 3) * std::exp(-a);
  const double v11 = th.sigma2 + th.tau2, v12 = th.sigma2 * rho;
  const double det = v11 * v11 - v12 * v12;
  const double quad = (v11 * y(0) * y(0) - 2 * v12 * y(0) * y(1) + v11 * y(1) * y(1)) / det;
  const double loglik = -std::log(2 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * quad;
  auto lig = [](double x, double s, double r) { return s * std::log(r) - std::lgamma(s) - (s + 1) * std::log(x) - r / x; };
  const double expected = -std::log(10.0) + lig(th.sigma2, 1, 1) + lig(th.tau2, 2, 1) + loglik;
  const auto terms = model::log_collapsed_posterior_terms(th, c, y, Family::matern52);
  EXPECT_NEAR(terms.log_likelihood, loglik, 1e-10);
  EXPECT_NEAR(terms.total(), expected, 1e-10);
}

TEST(LogPosterior, ScalingDataLeavesPriorTerms) {
  const auto d = small_dataset();
  auto d2 = d;
  d2.y *= 3.0;
  const ThetaDraw th{1.0, 0.8, 0.5};
  const auto a = model::log_collapsed_posterior_terms(th, d.coords, model::working_response(d), Family::gaussian);
  const auto b = model::log_collapsed_posterior_terms(th, d2.coords, model::working_response(d2), Family::gaussian);
  EXPECT_EQ(a.log_prior_phi, b.log_prior_phi);
  EXPECT_EQ(a.log_prior_sigma2, b.log_prior_sigma2);
  EXPECT_EQ(a.log_prior_tau2, b.log_prior_tau2);
  EXPECT_NE(a.log_likelihood, b.log_likelihood);
}

TEST(WorkingResponse, RemovesIntercept) {
  const auto d = small_dataset();
  const Eigen::VectorXd r = model::working_response(d);
  EXPECT_NEAR(r.sum(), 0.0, 1e-12);
  EXPECT_NEAR(r(0), d.y(0) - d.y.mean(), 1e-12);
}

TEST(FitTheta, ChainLengthAndIterations) {
  const auto d = testing::gp_dataset(3, 30, {1.0, 1.0, 0.5}, Family::matern52);
  McmcConfig c;
  c.iterations = 100;
  c.burn_in = 50;
  linalg::RngStream rng(1);
  const auto fit = model::fit_theta(d, Family::matern52, c, rng);
  EXPECT_EQ(fit.chain.size(), 50u);
  EXPECT_EQ(fit.iteration.front(), 51);
  EXPECT_EQ(fit.iteration.back(), 100);

  c.iterations = 51;
  linalg::RngStream rng2(1);
  EXPECT_EQ(model::fit_theta(d, Family::matern52, c, rng2).chain.size(), 1u);

  c.iterations = 100;
  c.thin = 7;
  linalg::RngStream rng3(1);
  const auto thinned = model::fit_theta(d, Family::matern52, c, rng3);
  EXPECT_EQ(thinned.chain.size(), 8u);
  EXPECT_EQ(thinned.iteration[1] - thinned.iteration[0], 7);
}

TEST(FitTheta, SeededRunsRepeat) {
  const auto d = testing::gp_dataset(3, 30, {1.0, 1.0, 0.5}, Family::matern52);
  McmcConfig c;
  c.iterations = 300;
  c.burn_in = 100;
  linalg::RngStream a(9), b(9);
  const auto fa = model::fit_theta(d, Family::gaussian, c, a);
  const auto fb = model::fit_theta(d, Family::gaussian, c, b);
  for (std::size_t i = 0; i < fa.chain.size(); ++i) {
    EXPECT_EQ(fa.chain[i].sigma2, fb.chain[i].sigma2);
    EXPECT_EQ(fa.chain[i].phi, fb.chain[i].phi);
    EXPECT_EQ(fa.chain[i].tau2, fb.chain[i].tau2);
  }
}

TEST(FitTheta, AdaptsTowardTarget) {
  const auto d = testing::gp_dataset(4, 40, {1.0, 1.0, 0.5}, Family::matern52);
  McmcConfig c;
  c.iterations = 3000;
  c.burn_in = 1500;
  linalg::RngStream rng(2);
  const auto fit = model::fit_theta(d, Family::matern52, c, rng);
  for (double a : fit.acceptance) {
    EXPECT_GT(a, 0.25);
    EXPECT_LT(a, 0.65);
  }
}

TEST(FitTheta, StalledChainDiverges) {
  const auto d = small_dataset();
  McmcConfig c;
  c.iterations = 3000;
  c.burn_in = 0;
  c.initial_step = 1e6;
  linalg::RngStream rng(1);
  EXPECT_THROW(model::fit_theta(d, Family::matern52, c, rng), McmcDivergence);
}

// Information-form posterior of u = (beta, Z) under a flat beta prior:
// precision = [X I]^T [X I] / tau2 + blkdiag(0, (sigma2 R)^{-1}).
TEST(ZBeta, MomentsMatchInformationForm) {
  const auto d = small_dataset();
  const ThetaDraw th{1.3, 0.9, 0.4};
  const Eigen::Index n = d.size(), q = d.num_covariates();
  Eigen::MatrixXd h(n, q + n);
  h << d.design, Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd prec = h.transpose() * h / th.tau2;
  const Eigen::MatrixXd k = th.sigma2 * model::correlation_matrix(d.coords, Family::matern52, th.phi);
  prec.bottomRightCorner(n, n) += k.fullPivLu().inverse();
  const Eigen::MatrixXd cov = prec.fullPivLu().inverse();
  const Eigen::VectorXd mean = cov * h.transpose() * d.y / th.tau2;

  const auto m = model::zbeta_joint_moments(d, th, Family::matern52);
  EXPECT_LE((m.mean - mean).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((m.cov - cov).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(ZBeta, NoiselessLimitInterpolates) {
  const auto d = small_dataset();
  const ThetaDraw th{1.0, 1.0, 1e-10};
  const auto m = model::zbeta_joint_moments(d, th, Family::matern52);
  const Eigen::VectorXd resid = d.y - d.design * m.mean.head(1);
  EXPECT_LE((m.mean.tail(d.size()) - resid).cwiseAbs().maxCoeff(), 1e-3);

  const std::vector<ThetaDraw> chain(3, th);
  const auto draws = model::sample_z_beta(d, chain, Family::matern52, linalg::RngStream(2));
  for (Eigen::Index i = 0; i < 3; ++i) {
    const Eigen::VectorXd r = d.y - d.design * draws.beta.row(i).transpose();
    EXPECT_LE((draws.z.row(i).transpose() - r).cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(ZBeta, DrawsMatchMoments) {
  const auto d = small_dataset();
  const ThetaDraw th{1.0, 1.0, 0.5};
  const auto m = model::zbeta_joint_moments(d, th, Family::gaussian);
  const std::vector<ThetaDraw> chain(20000, th);
  const auto draws = model::sample_z_beta(d, chain, Family::gaussian, linalg::RngStream(5));
  ASSERT_TRUE(draws.has_latent());
  EXPECT_NEAR(draws.beta.col(0).mean(), m.mean(0), 4 * std::sqrt(m.cov(0, 0) / 20000));
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    EXPECT_NEAR(draws.z.col(i).mean(), m.mean(1 + i), 4 * std::sqrt(m.cov(1 + i, 1 + i) / 20000));
  }
}

TEST(ZBeta, SeededAndStreamed) {
  const auto d = small_dataset();
  const std::vector<ThetaDraw> chain{{1.0, 1.0, 0.5}, {2.0, 0.5, 0.3}};
  const auto a = model::sample_z_beta(d, chain, Family::matern52, linalg::RngStream(5));
  const auto b = model::sample_z_beta(d, chain, Family::matern52, linalg::RngStream(5));
  EXPECT_EQ(a.z, b.z);
  EXPECT_EQ(a.beta, b.beta);
  EXPECT_NE(a.z.row(0), a.z.row(1));
}

TEST(ZBeta, SanityEnvelopeOnRingData) {
  const auto d = testing::ring_dataset(2024);
  McmcConfig c;
  c.iterations = 1500;
  c.burn_in = 1000;
  linalg::RngStream rng(3);
  const auto fit = model::fit_theta(d, Family::matern52, c, rng);
  const auto draws = model::sample_z_beta(d, fit, Family::matern52, c, linalg::RngStream(3));
  const Eigen::VectorXd zbar = draws.z.colwise().mean();
  const double sd = std::sqrt((d.y.array() - d.y.mean()).square().sum() / (d.size() - 1));
  ASSERT_TRUE(zbar.allFinite());
  EXPECT_GE(zbar.minCoeff(), d.y.minCoeff() - 3 * sd);
  EXPECT_LE(zbar.maxCoeff(), d.y.maxCoeff() + 3 * sd);
}

// y = X beta + Z + eps in distribution: per-draw residuals are draws of eps,
// so their empirical variance sits near the nugget.
TEST(ZBeta, ResidualVarianceTracksNugget) {
  const auto d = testing::ring_dataset(1);
  McmcConfig c;
  c.seed = 1;
  linalg::RngStream rng = linalg::RngStream(1).child(1);
  const auto fit = model::fit_theta(d, Family::matern52, c, rng);
  const auto draws = model::sample_z_beta(d, fit, Family::matern52, c, linalg::RngStream(1));
  double var = 0.0;
  for (Eigen::Index m = 0; m < draws.size(); ++m) {
    const Eigen::VectorXd r = d.y - d.design * draws.beta.row(m).transpose() - draws.z.row(m).transpose();
    var += (r.array() - r.mean()).square().sum() / (d.size() - 1);
  }
  var /= static_cast<double>(draws.size());
  std::vector<double> tau2;
  for (const ThetaDraw& t : draws.theta) tau2.push_back(t.tau2);
  const double med = stats::summarize(tau2).median;
  EXPECT_NEAR(var, med, 0.3 * med) << "residual var " << var << ", tau2 median " << med;
}

// Simulation-based calibration with chains shortened to keep the suite quick.
TEST(Calibration, Tau2IntervalsCoverTruth) {
  const ThetaDraw truth{1.0, 1.0, 0.5};
  McmcConfig c;
  c.iterations = 2000;
  c.burn_in = 1000;
  int covered = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto d = testing::gp_dataset(1000 + rep, 100, truth, Family::matern52);
    linalg::RngStream rng = linalg::RngStream(rep).child(1);
    const auto fit = model::fit_theta(d, Family::matern52, c, rng);
    covered += fit.summary.tau2.lo <= truth.tau2 && truth.tau2 <= fit.summary.tau2.hi;
  }
  EXPECT_GE(covered, 90);
}

}  // namespace
}  // namespace gpwomble
