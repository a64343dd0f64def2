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

#include "gpwomble/model.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include "gpwomble/errors.hpp"

namespace gpwomble::model {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMinSeparation = 1e-9;

}  // namespace

SpatialDataset make_dataset(Eigen::MatrixXd coords, Eigen::VectorXd y) {
  const Eigen::Index n = y.size();
  return make_dataset(std::move(coords), std::move(y), Eigen::MatrixXd::Ones(n, 1));
}

SpatialDataset make_dataset(Eigen::MatrixXd coords, Eigen::VectorXd y, Eigen::MatrixXd design) {
  SpatialDataset data{std::move(coords), std::move(y), std::move(design)};
  validate(data);
  return data;
}

void validate(const SpatialDataset& data) {
  const Eigen::Index n = data.y.size();
  if (n < 3) throw std::invalid_argument("dataset: need at least 3 locations, got " + std::to_string(n));
  if (data.coords.rows() != n || data.coords.cols() != 2) {
    throw std::invalid_argument("dataset: coords must be N x 2 with N = len(y)");
  }
  if (data.design.rows() != n) throw std::invalid_argument("dataset: design must have N rows");
  if (!data.coords.allFinite() || !data.y.allFinite() || !data.design.allFinite()) {
    throw std::invalid_argument("dataset: non-finite value");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if ((data.coords.row(i) - data.coords.row(j)).norm() < kMinSeparation) {
        throw std::invalid_argument("dataset: locations " + std::to_string(i + 1) + " and " +
                                    std::to_string(j + 1) + " coincide");
      }
    }
  }
  if (data.design.cols() > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.design);
    if (qr.rank() < data.design.cols() || data.design.cols() >= n) {
      throw std::invalid_argument("dataset: design matrix is rank deficient");
    }
  }
}

void validate(const McmcConfig& c) {
  if (c.iterations < 1) throw std::invalid_argument("mcmc: iterations must be positive");
  if (c.burn_in < 0 || c.burn_in >= c.iterations) {
    throw std::invalid_argument("mcmc: burn-in must satisfy 0 <= burn_in < iterations");
  }
  if (c.thin < 1) throw std::invalid_argument("mcmc: thin must be >= 1");
  if (!(c.target_acceptance > 0.0 && c.target_acceptance < 1.0)) {
    throw std::invalid_argument("mcmc: target acceptance must lie in (0, 1)");
  }
  if (!(c.initial_step > 0.0)) throw std::invalid_argument("mcmc: initial step must be positive");
  if (c.max_stalled_iterations < 1) throw std::invalid_argument("mcmc: stall limit must be positive");
  const Priors& p = c.priors;
  if (!(p.phi_max > 0.0 && p.sigma2_shape > 0.0 && p.sigma2_rate > 0.0 && p.tau2_shape > 0.0 &&
        p.tau2_rate > 0.0)) {
    throw std::invalid_argument("mcmc: prior hyper-parameters must be positive");
  }
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& coords, kernel::Family family, double phi) {
  const kernel::KernelSpec spec{family, 1.0, phi};
  const Eigen::Index n = coords.rows();
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = kernel::kernel_value((coords.row(i) - coords.row(j)).norm(), spec);
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return r;
}

Eigen::VectorXd working_response(const SpatialDataset& data) {
  if (data.design.cols() == 0) return data.y;
  const Eigen::VectorXd coef = data.design.colPivHouseholderQr().solve(data.y);
  return data.y - data.design * coef;
}

double log_inverse_gamma(double x, double shape, double rate) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - rate / x;
}

LogPosteriorTerms log_collapsed_posterior_terms(const ThetaDraw& theta, const Eigen::MatrixXd& coords,
                                                const Eigen::VectorXd& y_c, kernel::Family family,
                                                const Priors& priors) {
  LogPosteriorTerms t;
  t.log_prior_phi = (theta.phi > 0.0 && theta.phi <= priors.phi_max) ? -std::log(priors.phi_max) : kNegInf;
  t.log_prior_sigma2 = log_inverse_gamma(theta.sigma2, priors.sigma2_shape, priors.sigma2_rate);
  t.log_prior_tau2 = log_inverse_gamma(theta.tau2, priors.tau2_shape, priors.tau2_rate);
  if (t.log_prior_phi == kNegInf || t.log_prior_sigma2 == kNegInf || t.log_prior_tau2 == kNegInf) {
    t.log_likelihood = kNegInf;
    return t;
  }

  Eigen::MatrixXd v = theta.sigma2 * correlation_matrix(coords, family, theta.phi);
  v.diagonal().array() += theta.tau2;
  try {
    const linalg::CholeskyFactor chol(v);
    const Eigen::VectorXd w = chol.solve_lower(y_c);
    const double n = static_cast<double>(y_c.size());
    t.log_likelihood = -0.5 * (n * std::log(2.0 * std::numbers::pi) + chol.log_det() + w.squaredNorm());
  } catch (const FactorizationError& e) {
    spdlog::warn("log posterior: {} at sigma2={} phi={} tau2={}", e.what(), theta.sigma2, theta.phi,
                 theta.tau2);
    t.log_likelihood = kNegInf;
  }
  return t;
}

double log_collapsed_posterior(const ThetaDraw& theta, const Eigen::MatrixXd& coords,
                               const Eigen::VectorXd& y_c, kernel::Family family, const Priors& priors) {
  return log_collapsed_posterior_terms(theta, coords, y_c, family, priors).total();
}

double log_collapsed_posterior(const ThetaDraw& theta, const SpatialDataset& data,
                               kernel::Family family, const Priors& priors) {
  return log_collapsed_posterior(theta, data.coords, working_response(data), family, priors);
}

ThetaSummary summarize_chain(const std::vector<ThetaDraw>& chain) {
  if (chain.size() < 2) throw std::invalid_argument("summarize_chain: need at least 2 draws");
  std::vector<double> s2, phi, t2;
  s2.reserve(chain.size());
  phi.reserve(chain.size());
  t2.reserve(chain.size());
  for (const ThetaDraw& d : chain) {
    s2.push_back(d.sigma2);
    phi.push_back(d.phi);
    t2.push_back(d.tau2);
  }
  return {stats::summarize(s2), stats::summarize(phi), stats::summarize(t2)};
}

namespace {

// eta = (log sigma2, logit(phi / phi_max), log tau2).
struct Transformed {
  double phi_max;

  ThetaDraw to_theta(const std::array<double, 3>& eta) const {
    return {std::exp(eta[0]), phi_max / (1.0 + std::exp(-eta[1])), std::exp(eta[2])};
  }
  std::array<double, 3> to_eta(const ThetaDraw& t) const {
    const double u = t.phi / phi_max;
    return {std::log(t.sigma2), std::log(u / (1.0 - u)), std::log(t.tau2)};
  }
  // log |d theta / d eta|
  double log_jacobian(const std::array<double, 3>& eta) const {
    const double log_s = -std::log1p(std::exp(-eta[1]));
    const double log_1ms = -std::log1p(std::exp(eta[1]));
    return eta[0] + eta[2] + std::log(phi_max) + log_s + log_1ms;
  }
};

}  // namespace

FitResult fit_theta(const SpatialDataset& data, kernel::Family family, const McmcConfig& config,
                    linalg::RngStream& rng) {
  validate(data);
  validate(config);
  const Priors& priors = config.priors;
  const Eigen::VectorXd y_c = working_response(data);
  const Transformed tf{priors.phi_max};

  auto log_target = [&](const std::array<double, 3>& eta) {
    const double lp = log_collapsed_posterior(tf.to_theta(eta), data.coords, y_c, family, priors);
    return std::isfinite(lp) ? lp + tf.log_jacobian(eta) : kNegInf;
  };

  // Start at the best of a log-spaced phi grid with a fixed variance split.
  double var = y_c.squaredNorm() / std::max<double>(1.0, static_cast<double>(y_c.size() - 1));
  if (!(var > 0.0)) var = 1.0;
  ThetaDraw start{0.8 * var, 0.5, 0.2 * var};
  double best = kNegInf;
  constexpr int kGrid = 24;
  for (int g = 0; g < kGrid; ++g) {
    const double phi = priors.phi_max * std::pow(10.0, -3.0 + 2.95 * g / (kGrid - 1));
    const ThetaDraw cand{0.8 * var, phi, 0.2 * var};
    const double lp = log_target(tf.to_eta(cand));
    if (lp > best) {
      best = lp;
      start = cand;
    }
  }
  if (!std::isfinite(best)) {
    throw McmcDivergence("fit_theta: no finite starting point for the collapsed posterior");
  }

  std::array<double, 3> eta = tf.to_eta(start);
  double current = best;
  std::array<double, 3> log_step;
  log_step.fill(std::log(config.initial_step));
  std::array<long, 3> accepted{};
  long counted = 0;
  int stalled = 0;

  FitResult out;
  out.initial = start;
  const int retained = (config.iterations - config.burn_in + config.thin - 1) / config.thin;
  out.chain.reserve(retained);
  out.iteration.reserve(retained);

  for (int t = 0; t < config.iterations; ++t) {
    const bool adapting = t < config.burn_in;
    bool any = false;
    for (int j = 0; j < 3; ++j) {
      std::array<double, 3> prop = eta;
      prop[j] += std::exp(log_step[j]) * rng.normal();
      const double lp = log_target(prop);
      const double log_u = std::log(rng.uniform());
      const bool accept = std::isfinite(lp) && log_u < lp - current;
      if (accept) {
        eta = prop;
        current = lp;
        any = true;
      }
      if (adapting) {
        const double gain = std::pow(t + 1.0, -config.adaptation_exponent);
        log_step[j] += gain * ((accept ? 1.0 : 0.0) - config.target_acceptance);
      } else if (accept) {
        ++accepted[j];
      }
    }
    if (!adapting) ++counted;
    stalled = any ? 0 : stalled + 1;
    if (stalled >= config.max_stalled_iterations) {
      throw McmcDivergence("fit_theta: all proposals rejected for " + std::to_string(stalled) +
                           " consecutive iterations (iteration " + std::to_string(t + 1) + ")");
    }
    if (t >= config.burn_in && (t - config.burn_in) % config.thin == 0) {
      out.chain.push_back(tf.to_theta(eta));
      out.iteration.push_back(t + 1);
    }
  }
  for (int j = 0; j < 3; ++j) {
    out.acceptance[j] = counted > 0 ? static_cast<double>(accepted[j]) / counted : 0.0;
  }
  if (out.chain.size() >= 2) out.summary = summarize_chain(out.chain);
  spdlog::debug("fit_theta: acceptance sigma2={:.3f} phi={:.3f} tau2={:.3f}", out.acceptance[0],
                out.acceptance[1], out.acceptance[2]);
  return out;
}

namespace {

struct ZBetaPieces {
  linalg::CholeskyFactor chol;  // V = sigma2 R + tau2 I
  Eigen::MatrixXd v_inv;
  Eigen::VectorXd beta_hat;
  Eigen::MatrixXd beta_cov;
};

ZBetaPieces zbeta_pieces(const SpatialDataset& data, const ThetaDraw& theta, kernel::Family family) {
  const Eigen::Index n = data.size();
  Eigen::MatrixXd v = theta.sigma2 * correlation_matrix(data.coords, family, theta.phi);
  v.diagonal().array() += theta.tau2;
  ZBetaPieces p{linalg::CholeskyFactor(v), {}, {}, {}};
  p.v_inv = p.chol.solve(Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n)));
  p.v_inv = 0.5 * (p.v_inv + p.v_inv.transpose());
  const Eigen::Index q = data.num_covariates();
  if (q > 0) {
    const Eigen::MatrixXd vx = p.v_inv * data.design;
    Eigen::MatrixXd info = data.design.transpose() * vx;
    info = 0.5 * (info + info.transpose());
    const linalg::CholeskyFactor ic(info);
    p.beta_cov = ic.solve(Eigen::MatrixXd(Eigen::MatrixXd::Identity(q, q)));
    p.beta_cov = 0.5 * (p.beta_cov + p.beta_cov.transpose());
    p.beta_hat = p.beta_cov * (vx.transpose() * data.y);
  } else {
    p.beta_hat.resize(0);
    p.beta_cov.resize(0, 0);
  }
  return p;
}

}  // namespace

ZBetaMoments zbeta_joint_moments(const SpatialDataset& data, const ThetaDraw& theta,
                                 kernel::Family family) {
  const Eigen::Index n = data.size();
  const Eigen::Index q = data.num_covariates();
  const ZBetaPieces p = zbeta_pieces(data, theta, family);
  // Z | beta has mean A (y - X beta), A = I - tau2 V^{-1}.
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - theta.tau2 * p.v_inv;
  const Eigen::MatrixXd z_cov_given_beta = theta.tau2 * a;

  ZBetaMoments m;
  m.mean.resize(q + n);
  m.cov.setZero(q + n, q + n);
  if (q > 0) {
    const Eigen::MatrixXd ax = a * data.design;
    m.mean.head(q) = p.beta_hat;
    m.mean.tail(n) = a * (data.y - data.design * p.beta_hat);
    m.cov.topLeftCorner(q, q) = p.beta_cov;
    m.cov.bottomLeftCorner(n, q) = -ax * p.beta_cov;
    m.cov.topRightCorner(q, n) = m.cov.bottomLeftCorner(n, q).transpose();
    m.cov.bottomRightCorner(n, n) = z_cov_given_beta + ax * p.beta_cov * ax.transpose();
  } else {
    m.mean = a * data.y;
    m.cov = z_cov_given_beta;
  }
  return m;
}

PosteriorDraws sample_z_beta(const SpatialDataset& data, const std::vector<ThetaDraw>& chain,
                             kernel::Family family, const linalg::RngStream& rng) {
  validate(data);
  if (chain.empty()) throw std::invalid_argument("sample_z_beta: empty theta chain");
  const Eigen::Index n = data.size();
  const Eigen::Index q = data.num_covariates();
  const auto m_count = static_cast<Eigen::Index>(chain.size());

  PosteriorDraws out;
  out.theta = chain;
  out.z.resize(m_count, n);
  out.beta.resize(m_count, q);
  out.meta.family = family;
  std::vector<std::exception_ptr> errors(chain.size());

#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index m = 0; m < m_count; ++m) {
    try {
      const ThetaDraw& th = chain[m];
      linalg::RngStream local = rng.child(2, static_cast<std::uint64_t>(m));
      const ZBetaPieces p = zbeta_pieces(data, th, family);
      Eigen::VectorXd beta(q);
      if (q > 0) beta = linalg::mvn_sample(p.beta_hat, p.beta_cov, local);
      const Eigen::VectorXd r = q > 0 ? Eigen::VectorXd(data.y - data.design * beta) : data.y;
      const Eigen::VectorXd z_mean = r - th.tau2 * (p.v_inv * r);
      Eigen::MatrixXd z_cov = -th.tau2 * th.tau2 * p.v_inv;
      z_cov.diagonal().array() += th.tau2;
      Eigen::VectorXd z;
      try {
        z = linalg::mvn_sample(z_mean, z_cov, local);
      } catch (const FactorizationError&) {
        // Near the noiseless limit the covariance is numerically singular.
        z = linalg::mvn_sample_psd(z_mean, z_cov, local);
      }
      out.z.row(m) = z.transpose();
      if (q > 0) out.beta.row(m) = beta.transpose();
    } catch (...) {
      errors[m] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

PosteriorDraws sample_z_beta(const SpatialDataset& data, const FitResult& fit, kernel::Family family,
                             const McmcConfig& config, const linalg::RngStream& rng) {
  PosteriorDraws out = sample_z_beta(data, fit.chain, family, rng);
  out.iteration = fit.iteration;
  out.meta.config = config;
  return out;
}

}  // namespace gpwomble::model
