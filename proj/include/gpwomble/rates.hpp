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

#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "gpwomble/kernel.hpp"
#include "gpwomble/linalg.hpp"
#include "gpwomble/model.hpp"
#include "gpwomble/stats.hpp"

namespace gpwomble::rates {

/// Components in output order: d_x, d_y, d_xx, d_xy, d_yy.
inline constexpr int kMaxComponents = 5;
std::string_view component_name(int c);
/// Accepts dx, dy, dxx, dxy, dyy. Throws std::invalid_argument otherwise.
int parse_component(std::string_view name);

/// Cov(Z(s_i), (grad, curvature)(s0)) for every data site, N x 5 (N x 2
/// without curvature). Row i is [-dK(s_i - s0), +d2K(s_i - s0)]: the sign
/// flips only on the odd-order (gradient) columns.
Eigen::MatrixXd rates_cross_cov(const Point& s0, const Eigen::MatrixXd& coords,
                                const kernel::KernelSpec& spec, bool curvature);

struct ConditionalMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // symmetrized, not clamped
};

/// Moments of the rates at s0 given the latent field z (no nugget:
/// Sigma_Z = sigma2 R(phi)).
ConditionalMoments conditional_rates(const Point& s0, const Eigen::VectorXd& z,
                                     const model::ThetaDraw& theta, const Eigen::MatrixXd& coords,
                                     kernel::Family family, bool curvature);
inline ConditionalMoments conditional_rates(const Point& s0, const Eigen::VectorXd& z,
                                            const model::ThetaDraw& theta,
                                            const Eigen::MatrixXd& coords, kernel::Family family) {
  return conditional_rates(s0, z, theta, coords, family, kernel::supports_curvature(family));
}

struct RatesResult {
  Eigen::MatrixXd grid;  // G x 2, after any data-site perturbation
  int components = 0;
  Eigen::Index num_draws = 0;
  std::vector<double> draws;                  // (m * G + g) * components + c
  std::vector<stats::IntervalSummary> summary;  // g * components + c
  std::vector<int> sig;                       // g * components + c
  std::vector<bool> failed;                   // per grid point

  Eigen::Index num_points() const { return grid.rows(); }
  double draw(Eigen::Index m, Eigen::Index g, int c) const {
    return draws[(m * num_points() + g) * components + c];
  }
  const stats::IntervalSummary& at(Eigen::Index g, int c) const { return summary[g * components + c]; }
  int sig_at(Eigen::Index g, int c) const { return sig[g * components + c]; }
};

/// One conditional draw per (posterior draw, grid point). Draw m uses the
/// child stream (3, m). Grid points within 1e-9 of a data site are moved by
/// 1e-8 in each coordinate. A grid point whose conditional cannot be formed
/// is marked failed and carries NaN draws.
RatesResult sprates(const Eigen::MatrixXd& grid, const Eigen::MatrixXd& coords,
                    const model::PosteriorDraws& draws, kernel::Family family,
                    const linalg::RngStream& rng, bool curvature);
inline RatesResult sprates(const Eigen::MatrixXd& grid, const Eigen::MatrixXd& coords,
                           const model::PosteriorDraws& draws, kernel::Family family,
                           const linalg::RngStream& rng) {
  return sprates(grid, coords, draws, family, rng, kernel::supports_curvature(family));
}

}  // namespace gpwomble::rates
