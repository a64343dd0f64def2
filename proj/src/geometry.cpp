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

#include "gpwomble/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "gpwomble/linalg.hpp"

namespace gpwomble::geometry {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double GridSpec::x(int i) const { return i == nx - 1 ? xmax : xmin + i * dx(); }
double GridSpec::y(int j) const { return j == ny - 1 ? ymax : ymin + j * dy(); }

void validate(const GridSpec& s) {
  if (s.nx < 2 || s.ny < 2) throw std::invalid_argument("grid: nx and ny must be at least 2");
  if (!std::isfinite(s.xmin) || !std::isfinite(s.xmax) || !std::isfinite(s.ymin) ||
      !std::isfinite(s.ymax)) {
    throw std::invalid_argument("grid: bounds must be finite");
  }
  if (!(s.xmax > s.xmin) || !(s.ymax > s.ymin)) {
    throw std::invalid_argument("grid: need xmax > xmin and ymax > ymin");
  }
}

Eigen::MatrixXd make_grid(const GridSpec& spec) {
  validate(spec);
  Eigen::MatrixXd g(static_cast<Eigen::Index>(spec.nx) * spec.ny, 2);
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      g.row(static_cast<Eigen::Index>(j) * spec.nx + i) << spec.x(i), spec.y(j);
    }
  }
  return g;
}

double Surface::interpolate(const Point& p) const {
  const double tol = 1e-12;
  const double fx = (p.x() - grid.xmin) / grid.dx();
  const double fy = (p.y() - grid.ymin) / grid.dy();
  if (!(fx >= -tol && fx <= grid.nx - 1 + tol && fy >= -tol && fy <= grid.ny - 1 + tol)) return kNaN;
  const int i = std::clamp(static_cast<int>(std::floor(fx)), 0, grid.nx - 2);
  const int j = std::clamp(static_cast<int>(std::floor(fy)), 0, grid.ny - 2);
  const double tx = std::clamp(fx - i, 0.0, 1.0);
  const double ty = std::clamp(fy - j, 0.0, 1.0);
  return (1 - tx) * (1 - ty) * at(i, j) + tx * (1 - ty) * at(i + 1, j) + tx * ty * at(i + 1, j + 1) +
         (1 - tx) * ty * at(i, j + 1);
}

std::pair<double, double> Surface::range() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : values) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (lo > hi) return {kNaN, kNaN};
  return {lo, hi};
}

Surface predict_surface(const model::SpatialDataset& data, const model::PosteriorDraws& draws,
                        const GridSpec& spec, kernel::Family family, int stride,
                        const DesignFn& design) {
  const Eigen::MatrixXd grid = make_grid(spec);
  if (stride < 1) throw std::invalid_argument("predict_surface: stride must be >= 1");
  if (!draws.has_latent() || draws.z.cols() != data.size()) {
    throw std::invalid_argument("predict_surface: posterior draws carry no latent field for these sites");
  }
  const Eigen::Index p = data.num_covariates();
  DesignFn regressors = design;
  if (!regressors) {
    if (p == 0) {
      regressors = [](const Point&) { return Eigen::VectorXd(); };
    } else if (p == 1 && (data.design.array() == 1.0).all()) {
      regressors = [](const Point&) { return Eigen::VectorXd::Ones(1); };
    } else {
      throw std::invalid_argument("predict_surface: covariates at new locations are required");
    }
  }

  // alpha_m = Sigma_Z^{-1} z_m for the used draws.
  std::vector<Eigen::Index> used;
  std::vector<Eigen::VectorXd> alpha;
  for (Eigen::Index m = 0; m < draws.size(); m += stride) {
    const model::ThetaDraw& th = draws.theta[m];
    try {
      const linalg::CholeskyFactor chol(th.sigma2 * model::correlation_matrix(data.coords, family, th.phi));
      alpha.push_back(chol.solve(Eigen::VectorXd(draws.z.row(m).transpose())));
      used.push_back(m);
    } catch (const std::exception& e) {
      spdlog::warn("predict_surface: skipping draw {}: {}", m, e.what());
    }
  }

  Surface out{spec, std::vector<double>(static_cast<std::size_t>(grid.rows()), kNaN)};
  if (used.empty()) return out;
  const Eigen::Index g_count = grid.rows();

#pragma omp parallel for schedule(static)
  for (Eigen::Index g = 0; g < g_count; ++g) {
    const Point s0 = grid.row(g).transpose();
    try {
      const Eigen::VectorXd x0 = regressors(s0);
      if (x0.size() != p) throw std::invalid_argument("predict_surface: design callback size");
      double sum = 0.0;
      for (std::size_t k = 0; k < used.size(); ++k) {
        const Eigen::Index m = used[k];
        const model::ThetaDraw& th = draws.theta[m];
        const kernel::KernelSpec ks{family, th.sigma2, th.phi};
        double v = p > 0 ? x0.dot(draws.beta.row(m).transpose()) : 0.0;
        for (Eigen::Index i = 0; i < data.size(); ++i) {
          v += kernel::kernel_value((data.coords.row(i).transpose() - s0).norm(), ks) * alpha[k][i];
        }
        sum += v;
      }
      const double mean = sum / static_cast<double>(used.size());
      if (std::isfinite(mean)) out.values[g] = mean;
    } catch (const std::exception&) {
      // left missing
    }
  }
  return out;
}

namespace {

struct Piece {
  long start_edge;
  long end_edge;
};

}  // namespace

std::vector<Polyline> extract_contours(const Surface& surface, double level) {
  const GridSpec& g = surface.grid;
  validate(g);
  const auto [lo, hi] = surface.range();
  if (!std::isfinite(level) || !(level >= lo && level <= hi)) return {};

  const int nx = g.nx;
  auto h_edge = [nx](int i, int j) { return 2L * (static_cast<long>(j) * nx + i); };
  auto v_edge = [nx](int i, int j) { return 2L * (static_cast<long>(j) * nx + i) + 1; };

  auto edge_point = [&](long id) {
    const long node = id / 2;
    const int i = static_cast<int>(node % nx);
    const int j = static_cast<int>(node / nx);
    const int i2 = (id % 2 == 0) ? i + 1 : i;
    const int j2 = (id % 2 == 0) ? j : j + 1;
    const double va = surface.at(i, j);
    const double vb = surface.at(i2, j2);
    const double t = (level - va) / (vb - va);
    const Point a(g.x(i), g.y(j));
    const Point b(g.x(i2), g.y(j2));
    return Point(a + t * (b - a));
  };

  std::vector<Piece> pieces;
  for (int j = 0; j + 1 < g.ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const double v[4] = {surface.at(i, j), surface.at(i + 1, j), surface.at(i + 1, j + 1),
                           surface.at(i, j + 1)};
      if (!std::isfinite(v[0]) || !std::isfinite(v[1]) || !std::isfinite(v[2]) || !std::isfinite(v[3])) {
        continue;
      }
      const long edges[4] = {h_edge(i, j), v_edge(i + 1, j), h_edge(i, j + 1), v_edge(i, j)};
      bool high[4];
      for (int k = 0; k < 4; ++k) high[k] = v[k] > level;

      // Walking the cell counter-clockwise, edge k runs from corner k to k+1.
      // A high-to-low edge starts a piece, a low-to-high edge ends one.
      int starts[2], ends[2];
      int ns = 0, ne = 0;
      for (int k = 0; k < 4; ++k) {
        const bool a = high[k], b = high[(k + 1) % 4];
        if (a && !b) starts[ns++] = k;
        if (!a && b) ends[ne++] = k;
      }
      if (ns == 1) {
        pieces.push_back({edges[starts[0]], edges[ends[0]]});
      } else if (ns == 2) {
        const bool center_high = 0.25 * (v[0] + v[1] + v[2] + v[3]) > level;
        for (int s = 0; s < 2; ++s) {
          const int k = starts[s];
          // High centre: the high corners join, so each piece cuts off the low
          // corner just ahead. Low centre: it cuts off the high corner behind.
          const int e = center_high ? (k + 1) % 4 : (k + 3) % 4;
          pieces.push_back({edges[k], edges[e]});
        }
      }
    }
  }

  std::unordered_map<long, std::size_t> by_start;
  std::unordered_set<long> end_edges;
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    by_start[pieces[p].start_edge] = p;
    end_edges.insert(pieces[p].end_edge);
  }
  std::vector<char> used(pieces.size(), 0);
  std::unordered_map<long, Point> cache;
  auto point = [&](long id) -> const Point& {
    auto it = cache.find(id);
    if (it == cache.end()) it = cache.emplace(id, edge_point(id)).first;
    return it->second;
  };

  std::vector<Polyline> out;
  auto trace = [&](std::size_t first) {
    Polyline line{point(pieces[first].start_edge)};
    std::size_t p = first;
    while (true) {
      used[p] = 1;
      line.push_back(point(pieces[p].end_edge));
      auto next = by_start.find(pieces[p].end_edge);
      if (next == by_start.end() || used[next->second]) break;
      p = next->second;
    }
    out.push_back(std::move(line));
  };
  // Open pieces start on the grid boundary: their start edge ends no piece.
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    if (!used[p] && !end_edges.count(pieces[p].start_edge)) trace(p);
  }
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    if (!used[p]) trace(p);
  }
  return out;
}

}  // namespace gpwomble::geometry
