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

#include <Eigen/Core>

namespace gpwomble {

using Point = Eigen::Vector2d;
/// Planar offset s - s'.
using Displacement = Eigen::Vector2d;

namespace kernel {

/// Isotropic covariance families. The smoothness nu is fixed by the family:
/// 3/2, 5/2 and infinity (squared exponential).
enum class Family { matern32, matern52, gaussian };

/// Highest derivative order of K that exists at the origin: 2 for matern32,
/// 4 for matern52 and gaussian.
int max_derivative_order(Family family) noexcept;
inline bool supports_curvature(Family family) noexcept {
  return max_derivative_order(family) >= 4;
}

/// Command-line names: matern1 (nu = 3/2), matern2 (nu = 5/2), gaussian.
std::string_view family_name(Family family) noexcept;
/// Accepts the command-line names and the aliases matern32 / matern52.
Family parse_family(std::string_view name);

struct KernelSpec {
  Family family = Family::matern52;
  double sigma2 = 1.0;  ///< process variance
  double phi = 1.0;     ///< inverse range

  double nu() const noexcept;
};

/// Throws std::invalid_argument unless sigma2 > 0 and phi > 0 (both finite).
void validate(const KernelSpec& spec);

/// Derivatives of K(delta) with respect to delta. Curvature quantities use the
/// unique second-order index order (xx, xy, yy); d3k rows follow that order
/// and its columns are (x, y); d4k is indexed by unique pairs on both sides.
struct CrossCovBlocks {
  int order = 0;  ///< highest order filled in
  double k = 0.0;
  Eigen::Vector2d dk = Eigen::Vector2d::Zero();
  Eigen::Vector3d d2k = Eigen::Vector3d::Zero();
  Eigen::Matrix2d d2k_full = Eigen::Matrix2d::Zero();
  Eigen::Matrix<double, 3, 2> d3k = Eigen::Matrix<double, 3, 2>::Zero();
  Eigen::Matrix3d d4k = Eigen::Matrix3d::Zero();
};

/// K as a function of distance d >= 0. Throws on negative or non-finite d.
double kernel_value(double d, const KernelSpec& spec);

/// Analytic partial derivatives of K up to `max_order` (0..4). Throws
/// UnsupportedSmoothness when max_order exceeds max_derivative_order().
CrossCovBlocks cross_cov_blocks(const Displacement& delta, const KernelSpec& spec,
                                int max_order = 4);

/// Cov(L*Y(s), L*Y(s')) for delta = s - s', where L*Y stacks the field, its
/// gradient and (when the family allows it) its unique curvatures: 6x6 for
/// matern52 / gaussian, 3x3 for matern32. Entry (a, b) is
/// (-1)^{|b|} d^{a+b} K(delta).
Eigen::MatrixXd lstar_covariance(const Displacement& delta, const KernelSpec& spec);

/// Covariance of (gradient, unique curvatures) at a single location:
/// [[-d2K(0), -d3K(0)^T], [d3K(0), d4K(0)]]. 5x5 with curvature, else the 2x2
/// gradient block. Curvature on matern32 throws UnsupportedSmoothness.
Eigen::MatrixXd joint_cov_at_zero(const KernelSpec& spec, bool curvature = true);

}  // namespace kernel
}  // namespace gpwomble
