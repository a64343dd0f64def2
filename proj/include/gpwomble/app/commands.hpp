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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gpwomble/app/archive.hpp"
#include "gpwomble/geometry.hpp"
#include "gpwomble/rates.hpp"
#include "gpwomble/womble.hpp"

namespace gpwomble::app {

struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path archive;
  std::filesystem::path curve;
  std::filesystem::path out;
  std::filesystem::path rates;  // plot: directory written by `rates`
  std::optional<std::string> kernel;
  int iterations = 10000;
  int burn_in = 5000;
  int thin = 1;
  std::optional<std::uint64_t> seed;
  std::optional<geometry::GridSpec> grid;
  std::optional<double> level;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string field = "surface";   // plot: surface | dx | dy | dxx | dxy | dyy
  std::string component = "dx";    // plot: rates component used for markers
  std::string curvature = "auto";  // auto | on | off
  int draw_stride = 0;             // surface prediction; 0 picks one automatically
};

/// "xmin,xmax,ymin,ymax,nx,ny".
geometry::GridSpec parse_grid(std::string_view text);
/// Bounding box of the data sites with nx x ny points.
geometry::GridSpec default_grid(const model::SpatialDataset& data, int nx, int ny);
/// Every k-th draw so that at most 500 draws enter the surface mean.
int default_stride(Eigen::Index draws);
/// auto: curvature whenever the kernel has it. on: required (errors on
/// matern1). off: gradient only.
bool resolve_curvature(std::string_view mode, kernel::Family family);

geometry::Surface compute_surface(const Archive& archive, const geometry::GridSpec& grid, int stride);
womble::WomblingResult compute_wombling(const Archive& archive, const std::vector<Point>& curve,
                                        std::uint64_t seed, bool curvature);
rates::RatesResult compute_rates(const Archive& archive, const geometry::GridSpec& grid,
                                 std::uint64_t seed, bool curvature);

/// {"totals": {...}, "averages": {...}, "arc_length": ...} keyed by measure
/// name (gradient, curvature).
nlohmann::json wombling_totals_json(const womble::WomblingResult& result);
/// Per-segment summaries keyed by measure name.
nlohmann::json wombling_segments_json(const womble::WomblingResult& result);
nlohmann::json grid_json(const geometry::GridSpec& grid);

int cmd_fit(const RunConfig& config, std::ostream& out);
int cmd_zbeta(const RunConfig& config, std::ostream& out);
int cmd_rates(const RunConfig& config, std::ostream& out);
int cmd_contour(const RunConfig& config, std::ostream& out);
int cmd_womble(const RunConfig& config, std::ostream& out);
int cmd_plot(const RunConfig& config, std::ostream& out);
int cmd_serve(const RunConfig& config, std::ostream& out);

}  // namespace gpwomble::app
