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
#include <vector>

#include <Eigen/Core>

#include "gpwomble/kernel.hpp"
#include "gpwomble/linalg.hpp"
#include "gpwomble/model.hpp"
#include "gpwomble/stats.hpp"

namespace gpwomble::womble {

/// Default Gauss-Legendre node count for the line integrals.
inline constexpr int kDefaultNodes = 21;

struct Segment {
  Point start = Point::Zero();
  double length = 0.0;
  Eigen::Vector2d u = Eigen::Vector2d::UnitX();
  Eigen::Vector2d u_perp = -Eigen::Vector2d::UnitY();  // (u2, -u1)

  Point end() const { return start + length * u; }
};

/// Polyline -> segments in input order. Consecutive duplicate points are
/// dropped; fewer than two distinct points throws std::invalid_argument.
std::vector<Segment> segmentize(const std::vector<Point>& points);
double arc_length(const std::vector<Segment>& segments);

/// Number of wombling measures: 1 (gradient) or 2 (gradient, curvature).
inline int measure_count(bool curvature) { return curvature ? 2 : 1; }

/// Var of (gradient, curvature) wombling measures over one segment of length
/// t_star, i.e. the double integral of the directional derivative
/// covariances along the segment, in closed form. 1 x 1 for gradient only,
/// else 2 x 2 (diagonal; the cross term vanishes along a straight segment).
Eigen::MatrixXd k_gamma_closed(const kernel::KernelSpec& spec, double t_star, bool curvature);
inline Eigen::MatrixXd k_gamma_closed(const kernel::KernelSpec& spec, double t_star) {
  return k_gamma_closed(spec, t_star, kernel::supports_curvature(spec.family));
}

/// The same double integral by composite 2-D Gauss-Legendre, split at the
/// diagonal t1 = t2 where the Matern integrands have a kink. Always 2 x 2; the
/// curvature row and column are zero when the family has no curvature.
Eigen::Matrix2d k_gamma_quadrature(const kernel::KernelSpec& spec, const Segment& segment,
                                   int nodes = 64);

/// t_star * integral over the lag with uniform weight. This is the form that
/// drops the (t_star - |x|) weight of the exact lag integral; kept only to
/// report how far it is from the exact variance.
Eigen::MatrixXd k_gamma_lag_uniform(const kernel::KernelSpec& spec, double t_star, bool curvature);

/// Cov(Gamma(segment), Z(s_j)) for every data site: column 0 integrates
/// u_perp . dK, column 1 the second directional derivative along u_perp,
/// with Delta_j(t) = start + t u - s_j.
Eigen::MatrixXd gamma_cross(const Segment& segment, const Eigen::MatrixXd& coords,
                            const kernel::KernelSpec& spec, bool curvature,
                            int nodes = kDefaultNodes);

struct SegmentMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // symmetrized and clamped PSD
  Eigen::MatrixXd prior_cov;
};

/// Moments of Gamma(segment) given the latent field (Sigma_Z = sigma2 R).
SegmentMoments womble_moments(const Segment& segment, const Eigen::VectorXd& z,
                              const model::ThetaDraw& theta, const Eigen::MatrixXd& coords,
                              kernel::Family family, bool curvature, int nodes = kDefaultNodes);

/// One draw of Gamma(segment).
Eigen::VectorXd womble_segment(const Segment& segment, const Eigen::VectorXd& z,
                               const model::ThetaDraw& theta, const Eigen::MatrixXd& coords,
                               kernel::Family family, bool curvature, linalg::RngStream& rng,
                               int nodes = kDefaultNodes);

struct WomblingResult {
  std::vector<Segment> segments;
  int measures = 0;
  Eigen::Index num_draws = 0;
  std::vector<double> draws;                    // (m * S + s) * measures + k
  std::vector<stats::IntervalSummary> summary;  // s * measures + k
  std::vector<int> sig;                         // s * measures + k
  std::vector<bool> failed;                     // per segment
  std::array<stats::IntervalSummary, 2> totals{};    // column sums of summaries
  std::array<stats::IntervalSummary, 2> averages{};  // totals / arc length
  double arc_length = 0.0;

  Eigen::Index num_segments() const { return static_cast<Eigen::Index>(segments.size()); }
  double draw(Eigen::Index m, Eigen::Index s, int k) const {
    return draws[(m * num_segments() + s) * measures + k];
  }
  const stats::IntervalSummary& at(Eigen::Index s, int k) const { return summary[s * measures + k]; }
  int sig_at(Eigen::Index s, int k) const { return sig[s * measures + k]; }
};

/// One Gamma draw per (posterior draw, segment). Draw m uses the child
/// stream (4, m). Curvature on matern32 throws UnsupportedSmoothness.
WomblingResult spwombling(const std::vector<Point>& curve, const Eigen::MatrixXd& coords,
                          const model::PosteriorDraws& draws, kernel::Family family,
                          const linalg::RngStream& rng, bool curvature,
                          int nodes = kDefaultNodes);

}  // namespace gpwomble::womble
