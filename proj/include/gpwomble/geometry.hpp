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

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "gpwomble/kernel.hpp"
#include "gpwomble/model.hpp"

namespace gpwomble::geometry {

struct GridSpec {
  double xmin = 0.0;
  double xmax = 1.0;
  double ymin = 0.0;
  double ymax = 1.0;
  int nx = 2;
  int ny = 2;

  double x(int i) const;
  double y(int j) const;
  double dx() const { return (xmax - xmin) / (nx - 1); }
  double dy() const { return (ymax - ymin) / (ny - 1); }
};

/// nx, ny >= 2, finite bounds with max > min. Throws std::invalid_argument.
void validate(const GridSpec& spec);

/// Lattice points with x varying fastest: row j * nx + i is (x(i), y(j)).
/// Both bounds are included exactly.
Eigen::MatrixXd make_grid(const GridSpec& spec);

/// Values on a GridSpec lattice, same ordering as make_grid. NaN marks a
/// point whose prediction failed.
struct Surface {
  GridSpec grid;
  std::vector<double> values;

  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * grid.nx + i]; }
  /// Bilinear interpolation; NaN outside the grid or next to a missing value.
  double interpolate(const Point& p) const;
  /// Range of the finite values; {NaN, NaN} when there are none.
  std::pair<double, double> range() const;
};

/// Mean regressors x(s0) for prediction at new locations.
using DesignFn = std::function<Eigen::VectorXd(const Point&)>;

/// Posterior mean of x(s0)' beta + E[Z(s0) | Z, theta], averaged over every
/// `stride`-th draw. With an empty `design` the dataset must use the
/// intercept-only or zero-mean design.
Surface predict_surface(const model::SpatialDataset& data, const model::PosteriorDraws& draws,
                        const GridSpec& spec, kernel::Family family, int stride = 1,
                        const DesignFn& design = {});

using Polyline = std::vector<Point>;

/// Marching squares with linear interpolation along cell edges. Every piece
/// keeps larger values on its left. Saddles are split by the cell average.
/// Closed loops repeat their first point at the end. Levels outside the
/// value range give an empty list.
std::vector<Polyline> extract_contours(const Surface& surface, double level);

}  // namespace gpwomble::geometry
