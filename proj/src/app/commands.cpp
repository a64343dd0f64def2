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

#include "gpwomble/app/commands.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "gpwomble/app/csv.hpp"
#include "gpwomble/app/server.hpp"
#include "gpwomble/app/svg.hpp"
#include "gpwomble/errors.hpp"

namespace gpwomble::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSurfacePoints = 81;
constexpr int kRatesPoints = 21;
constexpr const char* kMeasureNames[2] = {"gradient", "curvature"};

void require(const fs::path& p, const char* flag) {
  if (p.empty()) throw std::invalid_argument(std::string("missing required option ") + flag);
}

std::uint64_t downstream_seed(const RunConfig& c, const Archive& a) { return c.seed.value_or(a.seed()); }

std::string interval_text(const stats::IntervalSummary& s) {
  std::ostringstream os;
  os << std::setprecision(6) << s.median << " (" << s.lo << ", " << s.hi << ")";
  return os.str();
}

std::vector<double> summary_row(const stats::IntervalSummary& s, int sig) {
  return {s.lo, s.median, s.hi, static_cast<double>(sig)};
}

}  // namespace

geometry::GridSpec parse_grid(std::string_view text) {
  std::vector<double> v;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string_view part = text.substr(start, comma == text.npos ? text.npos : comma - start);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), x);
    if (ec != std::errc() || ptr != part.data() + part.size() || part.empty()) {
      throw std::invalid_argument("--grid: expected xmin,xmax,ymin,ymax,nx,ny; bad value '" +
                                  std::string(part) + "'");
    }
    v.push_back(x);
    if (comma == text.npos) break;
    start = comma + 1;
  }
  if (v.size() != 6) throw std::invalid_argument("--grid: expected 6 comma-separated values xmin,xmax,ymin,ymax,nx,ny");
  if (v[4] != std::floor(v[4]) || v[5] != std::floor(v[5])) {
    throw std::invalid_argument("--grid: nx and ny must be integers");
  }
  geometry::GridSpec g{v[0], v[1], v[2], v[3], static_cast<int>(v[4]), static_cast<int>(v[5])};
  geometry::validate(g);
  return g;
}

geometry::GridSpec default_grid(const model::SpatialDataset& data, int nx, int ny) {
  const Eigen::Vector2d lo = data.coords.colwise().minCoeff();
  const Eigen::Vector2d hi = data.coords.colwise().maxCoeff();
  geometry::GridSpec g{lo.x(), hi.x(), lo.y(), hi.y(), nx, ny};
  geometry::validate(g);
  return g;
}

int default_stride(Eigen::Index draws) {
  constexpr Eigen::Index kMaxDraws = 500;
  return static_cast<int>(std::max<Eigen::Index>(1, (draws + kMaxDraws - 1) / kMaxDraws));
}

bool resolve_curvature(std::string_view mode, kernel::Family family) {
  if (mode == "auto") return kernel::supports_curvature(family);
  if (mode == "off") return false;
  if (mode == "on") {
    if (!kernel::supports_curvature(family)) {
      throw UnsupportedSmoothness("kernel " + std::string(kernel::family_name(family)) +
                                  " supports gradient wombling only; curvature needs matern2 or gaussian");
    }
    return true;
  }
  throw std::invalid_argument("--curvature must be auto, on or off");
}

geometry::Surface compute_surface(const Archive& archive, const geometry::GridSpec& grid, int stride) {
  return geometry::predict_surface(archive.data, archive.draws, grid, archive.family,
                                   stride > 0 ? stride : default_stride(archive.draws.size()));
}

womble::WomblingResult compute_wombling(const Archive& archive, const std::vector<Point>& curve,
                                        std::uint64_t seed, bool curvature) {
  return womble::spwombling(curve, archive.data.coords, archive.draws, archive.family,
                            linalg::RngStream(seed), curvature);
}

rates::RatesResult compute_rates(const Archive& archive, const geometry::GridSpec& grid,
                                 std::uint64_t seed, bool curvature) {
  return rates::sprates(geometry::make_grid(grid), archive.data.coords, archive.draws, archive.family,
                        linalg::RngStream(seed), curvature);
}

json wombling_totals_json(const womble::WomblingResult& r) {
  json totals = json::object(), averages = json::object();
  for (int k = 0; k < r.measures; ++k) {
    totals[kMeasureNames[k]] = to_json(r.totals[k]);
    averages[kMeasureNames[k]] = to_json(r.averages[k]);
  }
  return {{"totals", totals}, {"averages", averages}, {"arc_length", r.arc_length}};
}

json wombling_segments_json(const womble::WomblingResult& r) {
  json out = json::object();
  for (int k = 0; k < r.measures; ++k) {
    json list = json::array();
    for (Eigen::Index s = 0; s < r.num_segments(); ++s) {
      json item = to_json(r.at(s, k));
      item["seg"] = s + 1;
      item["sig"] = r.sig_at(s, k);
      list.push_back(item);
    }
    out[kMeasureNames[k]] = list;
  }
  return out;
}

json grid_json(const geometry::GridSpec& g) {
  return {{"xmin", g.xmin}, {"xmax", g.xmax}, {"ymin", g.ymin}, {"ymax", g.ymax}, {"nx", g.nx}, {"ny", g.ny}};
}

int cmd_fit(const RunConfig& c, std::ostream& out) {
  require(c.input, "--input");
  require(c.archive, "--archive");
  const kernel::Family family = kernel::parse_family(c.kernel.value_or("matern2"));
  const model::SpatialDataset data = read_dataset(c.input);
  model::McmcConfig mc;
  mc.iterations = c.iterations;
  mc.burn_in = c.burn_in;
  mc.thin = c.thin;
  mc.seed = c.seed.value_or(1);
  model::validate(mc);

  linalg::RngStream rng = linalg::RngStream(mc.seed).child(1);
  const model::FitResult fit = model::fit_theta(data, family, mc, rng);
  write_fit_archive(c.archive, c.input, data, family, mc, fit);

  out << "kernel " << kernel::family_name(family) << ", N = " << data.size() << ", retained draws "
      << fit.chain.size() << "\n";
  if (fit.chain.size() >= 2) {
    out << "sigma2  " << interval_text(fit.summary.sigma2) << "\n";
    out << "phi     " << interval_text(fit.summary.phi) << "\n";
    out << "tau2    " << interval_text(fit.summary.tau2) << "\n";
  }
  out << std::setprecision(3) << "acceptance sigma2 " << fit.acceptance[0] << ", phi " << fit.acceptance[1]
      << ", tau2 " << fit.acceptance[2] << "\n";
  return 0;
}

int cmd_zbeta(const RunConfig& c, std::ostream& out) {
  require(c.archive, "--archive");
  Archive a = load_archive(c.archive, false);
  const std::uint64_t seed = downstream_seed(c, a);
  const model::PosteriorDraws d = model::sample_z_beta(a.data, a.draws.theta, a.family, linalg::RngStream(seed));
  write_latent(a, d, seed);
  out << "wrote " << d.size() << " aligned z/beta draws to " << c.archive.string() << "\n";
  return 0;
}

int cmd_rates(const RunConfig& c, std::ostream& out) {
  require(c.archive, "--archive");
  require(c.out, "--out");
  const Archive a = load_archive(c.archive, true);
  const std::uint64_t seed = downstream_seed(c, a);
  const bool curvature = resolve_curvature(c.curvature, a.family);
  const geometry::GridSpec grid = c.grid.value_or(default_grid(a.data, kRatesPoints, kRatesPoints));
  const rates::RatesResult r = compute_rates(a, grid, seed, curvature);

  fs::create_directories(c.out);
  std::vector<std::string> outputs;
  for (int comp = 0; comp < r.components; ++comp) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index g = 0; g < r.num_points(); ++g) {
      std::vector<double> row{r.grid(g, 0), r.grid(g, 1)};
      const auto s = summary_row(r.at(g, comp), r.sig_at(g, comp));
      row.insert(row.end(), s.begin(), s.end());
      rows.push_back(row);
    }
    const std::string name = std::string(rates::component_name(comp)) + ".csv";
    write_csv(c.out / name, {"x", "y", "q2.5", "q50", "q97.5", "sig"}, rows);
    outputs.push_back(name);
    int pos = 0, neg = 0;
    for (Eigen::Index g = 0; g < r.num_points(); ++g) {
      pos += r.sig_at(g, comp) > 0;
      neg += r.sig_at(g, comp) < 0;
    }
    out << rates::component_name(comp) << ": " << pos << " positive, " << neg << " negative of "
        << r.num_points() << " grid points\n";
  }
  int failed = 0;
  for (bool f : r.failed) failed += f;
  if (failed > 0) out << failed << " grid point(s) failed and are marked NA\n";
  write_output_manifest(c.out, "rates", seed,
                        {{"grid", grid_json(grid)}, {"curvature", curvature}, {"archive", c.archive.string()}},
                        {c.archive / "theta.csv", c.archive / "z.csv", c.archive / "beta.csv"}, outputs);
  return 0;
}

int cmd_contour(const RunConfig& c, std::ostream& out) {
  require(c.archive, "--archive");
  require(c.out, "--out");
  if (!c.level) throw std::invalid_argument("missing required option --level");
  const Archive a = load_archive(c.archive, true);
  const geometry::GridSpec grid = c.grid.value_or(default_grid(a.data, kSurfacePoints, kSurfacePoints));
  const int stride = c.draw_stride > 0 ? c.draw_stride : default_stride(a.draws.size());
  const geometry::Surface surface = compute_surface(a, grid, stride);
  const auto contours = geometry::extract_contours(surface, *c.level);

  fs::create_directories(c.out);
  std::vector<std::string> outputs;
  std::vector<std::vector<double>> srows;
  const Eigen::MatrixXd pts = geometry::make_grid(grid);
  for (Eigen::Index g = 0; g < pts.rows(); ++g) srows.push_back({pts(g, 0), pts(g, 1), surface.values[g]});
  write_csv(c.out / "surface.csv", {"x", "y", "z"}, srows);
  outputs.push_back("surface.csv");
  for (std::size_t k = 0; k < contours.size(); ++k) {
    std::vector<std::vector<double>> rows;
    for (const Point& p : contours[k]) rows.push_back({p.x(), p.y()});
    const std::string name = "contour_" + std::to_string(k + 1) + ".csv";
    write_csv(c.out / name, {"x", "y"}, rows);
    outputs.push_back(name);
    const bool closed = contours[k].size() > 2 && contours[k].front() == contours[k].back();
    out << name << ": " << contours[k].size() << " vertices" << (closed ? ", closed" : ", open") << "\n";
  }
  if (contours.empty()) out << "no contour at level " << *c.level << "\n";
  write_output_manifest(c.out, "contour", a.seed(),
                        {{"grid", grid_json(grid)}, {"level", *c.level}, {"draw_stride", stride},
                         {"archive", c.archive.string()}},
                        {c.archive / "theta.csv", c.archive / "z.csv", c.archive / "beta.csv"}, outputs);
  return 0;
}

int cmd_womble(const RunConfig& c, std::ostream& out) {
  require(c.archive, "--archive");
  require(c.curve, "--curve");
  require(c.out, "--out");
  const Archive a = load_archive(c.archive, true);
  const bool curvature = resolve_curvature(c.curvature, a.family);
  const std::uint64_t seed = downstream_seed(c, a);
  const std::vector<Point> curve = read_curve(c.curve);
  const womble::WomblingResult r = compute_wombling(a, curve, seed, curvature);

  fs::create_directories(c.out);
  std::vector<std::string> outputs;
  for (int k = 0; k < r.measures; ++k) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index s = 0; s < r.num_segments(); ++s) {
      std::vector<double> row{static_cast<double>(s + 1)};
      const auto v = summary_row(r.at(s, k), r.sig_at(s, k));
      row.insert(row.end(), v.begin(), v.end());
      rows.push_back(row);
    }
    const std::string name = "wm" + std::to_string(k + 1) + ".csv";
    write_csv(c.out / name, {"seg", "q2.5", "q50", "q97.5", "sig"}, rows);
    outputs.push_back(name);
  }
  write_file(c.out / "totals.json", wombling_totals_json(r).dump(2) + "\n");
  outputs.push_back("totals.json");

  out << r.num_segments() << " segments, arc length " << r.arc_length << "\n";
  for (int k = 0; k < r.measures; ++k) {
    int sig = 0;
    for (Eigen::Index s = 0; s < r.num_segments(); ++s) sig += r.sig_at(s, k) != 0;
    out << kMeasureNames[k] << " total " << interval_text(r.totals[k]) << ", " << sig
        << " significant segment(s)\n";
  }
  write_output_manifest(c.out, "womble", seed,
                        {{"curvature", curvature}, {"archive", c.archive.string()}, {"curve", c.curve.string()}},
                        {c.archive / "theta.csv", c.archive / "z.csv", c.archive / "beta.csv", c.curve}, outputs);
  return 0;
}

namespace {

// Field and markers from a rates output directory.
geometry::Surface read_rates_field(const fs::path& dir, std::string_view component,
                                   std::vector<SigMarker>* markers) {
  const fs::path file = dir / (std::string(component) + ".csv");
  if (!fs::exists(file)) {
    throw std::runtime_error("rates output " + file.string() + " is missing; run `gpwomble rates` first");
  }
  const json manifest = json::parse(read_file(dir / "manifest.json"));
  const json& gj = manifest.at("config").at("grid");
  const geometry::GridSpec grid{gj.at("xmin"), gj.at("xmax"), gj.at("ymin"), gj.at("ymax"), gj.at("nx"), gj.at("ny")};
  const CsvTable t = read_csv(file, {"x", "y", "q50", "sig"});
  if (t.rows.size() != static_cast<std::size_t>(grid.nx) * grid.ny) {
    throw std::runtime_error(file.string() + ": row count does not match the recorded grid");
  }
  geometry::Surface s{grid, {}};
  const std::size_t cx = t.column("x"), cy = t.column("y"), cm = t.column("q50"), cs = t.column("sig");
  for (const auto& row : t.rows) {
    s.values.push_back(row[cm]);
    if (markers) {
      markers->push_back({Point(row[cx], row[cy]), std::isfinite(row[cs]) ? static_cast<int>(row[cs]) : 0});
    }
  }
  return s;
}

}  // namespace

int cmd_plot(const RunConfig& c, std::ostream& out) {
  require(c.archive, "--archive");
  require(c.out, "--out");
  std::vector<SigMarker> markers;
  geometry::Surface field;
  std::string title;
  int stride = 0;
  const Archive a = load_archive(c.archive, c.field == "surface");
  if (c.field == "surface") {
    const geometry::GridSpec grid = c.grid.value_or(default_grid(a.data, kSurfacePoints, kSurfacePoints));
    stride = c.draw_stride > 0 ? c.draw_stride : default_stride(a.draws.size());
    field = compute_surface(a, grid, stride);
    title = "posterior mean surface";
    if (!c.rates.empty()) {
      read_rates_field(c.rates, c.component, &markers);
      title += ", significant " + c.component;
    }
  } else {
    rates::parse_component(c.field);
    if (c.rates.empty()) throw std::invalid_argument("plot --field " + c.field + " needs --rates DIR");
    field = read_rates_field(c.rates, c.field, &markers);
    title = "posterior median of " + c.field;
  }
  std::vector<geometry::Polyline> curves;
  if (!c.curve.empty()) curves.push_back(read_curve(c.curve));

  fs::create_directories(c.out);
  const std::string name = c.field + ".svg";
  write_file(c.out / name, render_heatmap_svg(field, markers, curves, title));
  int shown = 0;
  for (const SigMarker& m : markers) shown += m.sig != 0;
  out << "wrote " << (c.out / name).string() << " (" << shown << " significant markers)\n";

  std::vector<fs::path> inputs{c.archive / "theta.csv"};
  if (fs::exists(c.archive / "z.csv")) inputs.push_back(c.archive / "z.csv");
  if (!c.curve.empty()) inputs.push_back(c.curve);
  json cfg{{"field", c.field}, {"archive", c.archive.string()}, {"draw_stride", stride}, {"grid", grid_json(field.grid)}};
  if (!c.rates.empty()) cfg["rates"] = c.rates.string();
  write_output_manifest(c.out, "plot", a.seed(), cfg, inputs, {name});
  return 0;
}

int cmd_serve(const RunConfig& c, std::ostream& out) {
  require(c.archive, "--archive");
  Archive a = load_archive(c.archive, true);
  WombleServer server(std::move(a));
  const int port = server.bind(c.host, c.port);
  out << "serving " << c.archive.string() << " on http://" << c.host << ":" << port << "\n" << std::flush;
  server.run();
  return 0;
}

}  // namespace gpwomble::app
