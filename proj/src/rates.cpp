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

#include "gpwomble/rates.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <spdlog/spdlog.h>

#include "gpwomble/errors.hpp"

namespace gpwomble::rates {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::string_view kNames[kMaxComponents] = {"dx", "dy", "dxx", "dxy", "dyy"};

int dimension(bool curvature) { return curvature ? 5 : 2; }

void check_family(kernel::Family family, bool curvature) {
  if (curvature && !kernel::supports_curvature(family)) {
    throw UnsupportedSmoothness("rates: kernel " + std::string(kernel::family_name(family)) +
                                " has no curvature process; use matern2 or gaussian");
  }
}

// Sigma_Z = sigma2 R(phi).
linalg::CholeskyFactor latent_factor(const model::ThetaDraw& theta, const Eigen::MatrixXd& coords,
                                     kernel::Family family) {
  return linalg::CholeskyFactor(theta.sigma2 * model::correlation_matrix(coords, family, theta.phi));
}

}  // namespace

std::string_view component_name(int c) {
  if (c < 0 || c >= kMaxComponents) throw std::out_of_range("rates: component index");
  return kNames[c];
}

int parse_component(std::string_view name) {
  for (int c = 0; c < kMaxComponents; ++c) {
    if (kNames[c] == name) return c;
  }
  throw std::invalid_argument("unknown rates component '" + std::string(name) +
                              "' (expected dx, dy, dxx, dxy or dyy)");
}

Eigen::MatrixXd rates_cross_cov(const Point& s0, const Eigen::MatrixXd& coords,
                                const kernel::KernelSpec& spec, bool curvature) {
  check_family(spec.family, curvature);
  const int d = dimension(curvature);
  Eigen::MatrixXd c(coords.rows(), d);
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    const Displacement delta = coords.row(i).transpose() - s0;
    const kernel::CrossCovBlocks b = kernel::cross_cov_blocks(delta, spec, curvature ? 2 : 1);
    c(i, 0) = -b.dk.x();
    c(i, 1) = -b.dk.y();
    if (curvature) c.row(i).tail<3>() = b.d2k.transpose();
  }
  return c;
}

ConditionalMoments conditional_rates(const Point& s0, const Eigen::VectorXd& z,
                                     const model::ThetaDraw& theta, const Eigen::MatrixXd& coords,
                                     kernel::Family family, bool curvature) {
  check_family(family, curvature);
  if (z.size() != coords.rows()) throw std::invalid_argument("conditional_rates: z size mismatch");
  const kernel::KernelSpec spec{family, theta.sigma2, theta.phi};
  kernel::validate(spec);
  const linalg::CholeskyFactor chol = latent_factor(theta, coords, family);
  const Eigen::MatrixXd w = chol.solve_lower(rates_cross_cov(s0, coords, spec, curvature));
  const Eigen::VectorXd wz = chol.solve_lower(z);

  ConditionalMoments m;
  m.mean = w.transpose() * wz;
  const Eigen::MatrixXd cov = kernel::joint_cov_at_zero(spec, curvature) - w.transpose() * w;
  m.cov = 0.5 * (cov + cov.transpose());
  return m;
}

RatesResult sprates(const Eigen::MatrixXd& grid, const Eigen::MatrixXd& coords,
                    const model::PosteriorDraws& draws, kernel::Family family,
                    const linalg::RngStream& rng, bool curvature) {
  check_family(family, curvature);
  if (grid.rows() == 0 || grid.cols() != 2) throw std::invalid_argument("sprates: empty or malformed grid");
  if (draws.size() == 0) throw std::invalid_argument("sprates: no posterior draws");
  if (!draws.has_latent() || draws.z.cols() != coords.rows()) {
    throw std::invalid_argument("sprates: posterior draws carry no latent field for these sites");
  }

  const int d = dimension(curvature);
  const Eigen::Index g_count = grid.rows();
  const Eigen::Index m_count = draws.size();

  RatesResult out;
  out.grid = grid;
  out.components = d;
  out.num_draws = m_count;
  int moved = 0;
  for (Eigen::Index g = 0; g < g_count; ++g) {
    for (Eigen::Index i = 0; i < coords.rows(); ++i) {
      if ((out.grid.row(g) - coords.row(i)).norm() < 1e-9) {
        out.grid.row(g).array() += 1e-8;
        ++moved;
        break;
      }
    }
  }
  if (moved > 0) spdlog::info("sprates: moved {} grid point(s) off data sites by 1e-8", moved);

  out.draws.assign(static_cast<std::size_t>(m_count * g_count * d), kNaN);
  std::vector<char> failed(static_cast<std::size_t>(g_count), 0);

#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index m = 0; m < m_count; ++m) {
    const model::ThetaDraw& th = draws.theta[m];
    const kernel::KernelSpec spec{family, th.sigma2, th.phi};
    linalg::RngStream local = rng.child(3, static_cast<std::uint64_t>(m));
    try {
      const linalg::CholeskyFactor chol = latent_factor(th, coords, family);
      Eigen::MatrixXd cross(coords.rows(), g_count * d);
      for (Eigen::Index g = 0; g < g_count; ++g) {
        cross.middleCols(g * d, d) = rates_cross_cov(out.grid.row(g).transpose(), coords, spec, curvature);
      }
      const Eigen::MatrixXd w = chol.solve_lower(cross);
      const Eigen::VectorXd wz = chol.solve_lower(Eigen::VectorXd(draws.z.row(m).transpose()));
      const Eigen::MatrixXd j0 = kernel::joint_cov_at_zero(spec, curvature);
      for (Eigen::Index g = 0; g < g_count; ++g) {
        const auto wg = w.middleCols(g * d, d);
        const Eigen::VectorXd mean = wg.transpose() * wz;
        const Eigen::MatrixXd cov = j0 - wg.transpose() * wg;
        const Eigen::VectorXd x = linalg::mvn_sample_psd(mean, cov, local);
        if (!x.allFinite()) {
#pragma omp critical(gpwomble_rates_failed)
          failed[g] = 1;
          continue;
        }
        for (int c = 0; c < d; ++c) out.draws[(m * g_count + g) * d + c] = x[c];
      }
    } catch (const std::exception& e) {
#pragma omp critical(gpwomble_rates_failed)
      {
        spdlog::warn("sprates: draw {} failed: {}", m, e.what());
        std::fill(failed.begin(), failed.end(), 1);
      }
    }
  }

  out.failed.assign(failed.begin(), failed.end());
  out.summary.resize(static_cast<std::size_t>(g_count * d));
  out.sig.assign(static_cast<std::size_t>(g_count * d), 0);
  std::vector<double> column(static_cast<std::size_t>(m_count));
  for (Eigen::Index g = 0; g < g_count; ++g) {
    for (int c = 0; c < d; ++c) {
      const std::size_t k = static_cast<std::size_t>(g * d + c);
      if (out.failed[g]) {
        out.summary[k] = {kNaN, kNaN, kNaN};
        continue;
      }
      for (Eigen::Index m = 0; m < m_count; ++m) column[m] = out.draw(m, g, c);
      out.summary[k] = stats::summarize(column);
      out.sig[k] = stats::significance(out.summary[k]);
    }
  }
  return out;
}

}  // namespace gpwomble::rates
