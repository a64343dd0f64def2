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

#include "gpwomble/app/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace gpwomble::app {

namespace {

constexpr double kPlot = 560.0;
constexpr double kMargin = 50.0;
constexpr double kBarWidth = 18.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string fmt_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Viridis, five stops.
std::string color(double t) {
  static constexpr std::array<std::array<double, 3>, 5> kStops = {{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * (kStops.size() - 1);
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(t), kStops.size() - 2);
  const double f = t - static_cast<double>(k);
  char buf[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c) rgb[c] = static_cast<int>(std::lround(kStops[k][c] + f * (kStops[k + 1][c] - kStops[k][c])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_heatmap_svg(const geometry::Surface& field, const std::vector<SigMarker>& markers,
                               const std::vector<geometry::Polyline>& curves, std::string_view title) {
  const geometry::GridSpec& g = field.grid;
  const double sx = kPlot / (g.xmax - g.xmin + g.dx());
  const double sy = kPlot / (g.ymax - g.ymin + g.dy());
  auto px = [&](double x) { return kMargin + (x - g.xmin + 0.5 * g.dx()) * sx; };
  auto py = [&](double y) { return kMargin + kPlot - (y - g.ymin + 0.5 * g.dy()) * sy; };

  auto [lo, hi] = field.range();
  const bool flat = !(hi > lo);
  auto scale = [&](double v) { return flat ? 0.5 : (v - lo) / (hi - lo); };

  const double width = 2 * kMargin + kPlot + 3 * kBarWidth + 60;
  const double height = 2 * kMargin + kPlot;
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) +
       "\" viewBox=\"0 0 " + fmt(width) + " " + fmt(height) + "\">\n";
  s += "<title>" + escape(title) + "</title>\n";
  s += "<text x=\"" + fmt(kMargin) + "\" y=\"" + fmt(kMargin - 15) + "\" font-family=\"sans-serif\" font-size=\"14\">" +
       escape(title) + "</text>\n";

  s += "<g id=\"heatmap\" shape-rendering=\"crispEdges\">\n";
  const std::string cw = fmt(g.dx() * sx + 0.05), ch = fmt(g.dy() * sy + 0.05);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double v = field.at(i, j);
      const std::string fill = std::isfinite(v) ? color(scale(v)) : "#d0d0d0";
      s += "<rect x=\"" + fmt(px(g.x(i)) - 0.5 * g.dx() * sx) + "\" y=\"" + fmt(py(g.y(j)) - 0.5 * g.dy() * sy) +
           "\" width=\"" + cw + "\" height=\"" + ch + "\" fill=\"" + fill + "\"/>\n";
    }
  }
  s += "</g>\n";

  s += "<rect x=\"" + fmt(kMargin) + "\" y=\"" + fmt(kMargin) + "\" width=\"" + fmt(kPlot) + "\" height=\"" +
       fmt(kPlot) + "\" fill=\"none\" stroke=\"#000\"/>\n";
  s += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (double x : {g.xmin, 0.5 * (g.xmin + g.xmax), g.xmax}) {
    s += "<text x=\"" + fmt(px(x)) + "\" y=\"" + fmt(kMargin + kPlot + 16) + "\" text-anchor=\"middle\">" +
         fmt_value(x) + "</text>\n";
  }
  for (double y : {g.ymin, 0.5 * (g.ymin + g.ymax), g.ymax}) {
    s += "<text x=\"" + fmt(kMargin - 6) + "\" y=\"" + fmt(py(y) + 4) + "\" text-anchor=\"end\">" + fmt_value(y) +
         "</text>\n";
  }
  s += "</g>\n";

  // Colour bar.
  const double bx = kMargin + kPlot + kBarWidth;
  s += "<g id=\"legend\">\n";
  constexpr int kSteps = 32;
  for (int k = 0; k < kSteps; ++k) {
    const double t = flat ? 0.5 : (k + 0.5) / kSteps;
    s += "<rect x=\"" + fmt(bx) + "\" y=\"" + fmt(kMargin + kPlot * (1.0 - (k + 1.0) / kSteps)) + "\" width=\"" +
         fmt(kBarWidth) + "\" height=\"" + fmt(kPlot / kSteps + 0.05) + "\" fill=\"" + color(t) + "\"/>\n";
  }
  if (std::isfinite(lo)) {
    s += "<text x=\"" + fmt(bx + kBarWidth + 4) + "\" y=\"" + fmt(kMargin + kPlot) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + fmt_value(lo) + "</text>\n";
    if (!flat) {
      s += "<text x=\"" + fmt(bx + kBarWidth + 4) + "\" y=\"" + fmt(kMargin + 10) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + fmt_value(hi) + "</text>\n";
    }
  }
  s += "</g>\n";

  if (!curves.empty()) {
    s += "<g id=\"curves\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\">\n";
    for (const auto& c : curves) {
      s += "<polyline points=\"";
      for (std::size_t k = 0; k < c.size(); ++k) {
        s += (k ? " " : "") + fmt(px(c[k].x())) + "," + fmt(py(c[k].y()));
      }
      s += "\"/>\n";
    }
    s += "</g>\n";
  }

  bool any = false;
  for (const SigMarker& m : markers) any = any || m.sig != 0;
  if (any) {
    s += "<g id=\"markers\">\n";
    for (const SigMarker& m : markers) {
      if (m.sig == 0) continue;
      const std::string pos = "cx=\"" + fmt(px(m.location.x())) + "\" cy=\"" + fmt(py(m.location.y())) + "\" r=\"4\"";
      if (m.sig > 0) {
        s += "<circle class=\"sig-pos\" " + pos + " fill=\"#2ca02c\" stroke=\"#000\" stroke-width=\"0.5\"/>\n";
      } else {
        s += "<circle class=\"sig-neg\" " + pos + " fill=\"none\" stroke=\"#00bcd4\" stroke-width=\"1.5\"/>\n";
      }
    }
    s += "</g>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace gpwomble::app
