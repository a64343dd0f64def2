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

#include <exception>
#include <iostream>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "gpwomble/app/commands.hpp"

using gpwomble::app::RunConfig;

namespace {

void add_seed(CLI::App* sub, RunConfig& c) {
  sub->add_option_function<std::uint64_t>("--seed", [&c](std::uint64_t s) { c.seed = s; },
                                          "RNG seed (downstream commands default to the archive seed)");
}

void add_grid(CLI::App* sub, RunConfig& c) {
  sub->add_option_function<std::string>(
      "--grid", [&c](const std::string& g) { c.grid = gpwomble::app::parse_grid(g); },
      "xmin,xmax,ymin,ymax,nx,ny (default: data bounding box)");
}

}  // namespace

int main(int argc, char** argv) {
  // Keep stdout for command output.
  spdlog::set_default_logger(spdlog::stderr_color_mt("gpwomble"));
  spdlog::set_level(spdlog::level::warn);
  RunConfig c;
  CLI::App app{"Bayesian wombling for Gaussian-process surfaces"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "gpwomble 0.1.0");
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "log progress to stderr");

  auto* fit = app.add_subcommand("fit", "sample (sigma2, phi, tau2) and write an archive");
  fit->add_option("--input", c.input, "CSV with columns x,y,val")->required();
  fit->add_option("--archive", c.archive, "output archive directory")->required();
  fit->add_option_function<std::string>("--kernel", [&c](const std::string& k) { c.kernel = k; },
                                        "matern1 | matern2 | gaussian (default matern2)");
  fit->add_option("--iterations", c.iterations, "total MCMC iterations")->capture_default_str();
  fit->add_option("--burn-in", c.burn_in, "discarded leading iterations")->capture_default_str();
  fit->add_option("--thin", c.thin, "keep every k-th post-burn-in draw")->capture_default_str();
  add_seed(fit, c);

  auto* zbeta = app.add_subcommand("zbeta", "draw latent z and beta for every retained theta");
  zbeta->add_option("--archive", c.archive)->required();
  add_seed(zbeta, c);

  auto* rates = app.add_subcommand("rates", "posterior gradient and curvature on a grid");
  rates->add_option("--archive", c.archive)->required();
  rates->add_option("--out", c.out)->required();
  rates->add_option("--curvature", c.curvature, "auto | on | off")->capture_default_str();
  add_grid(rates, c);
  add_seed(rates, c);

  auto* contour = app.add_subcommand("contour", "posterior mean surface and its level curves");
  contour->add_option("--archive", c.archive)->required();
  contour->add_option("--out", c.out)->required();
  contour->add_option_function<double>("--level", [&c](double l) { c.level = l; })->required();
  contour->add_option("--draw-stride", c.draw_stride, "use every k-th draw (0 = automatic)");
  add_grid(contour, c);

  auto* womble = app.add_subcommand("womble", "line-integral wombling measures along a curve");
  womble->add_option("--archive", c.archive)->required();
  womble->add_option("--curve", c.curve, "CSV polyline with columns x,y")->required();
  womble->add_option("--out", c.out)->required();
  womble->add_option("--curvature", c.curvature, "auto | on | off")->capture_default_str();
  add_seed(womble, c);

  auto* plot = app.add_subcommand("plot", "SVG heat map with significance markers");
  plot->add_option("--archive", c.archive)->required();
  plot->add_option("--out", c.out)->required();
  plot->add_option("--field", c.field, "surface | dx | dy | dxx | dxy | dyy")->capture_default_str();
  plot->add_option("--component", c.component, "rates component used for markers")->capture_default_str();
  plot->add_option("--rates", c.rates, "directory written by `gpwomble rates`");
  plot->add_option("--curve", c.curve, "polyline to overlay");
  plot->add_option("--draw-stride", c.draw_stride, "use every k-th draw (0 = automatic)");
  add_grid(plot, c);

  auto* serve = app.add_subcommand("serve", "HTTP JSON API over an archive");
  serve->add_option("--archive", c.archive)->required();
  serve->add_option("--host", c.host)->capture_default_str();
  serve->add_option("--port", c.port, "0 picks a free port")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (verbose) spdlog::set_level(spdlog::level::info);

  try {
    namespace a = gpwomble::app;
    if (*fit) return a::cmd_fit(c, std::cout);
    if (*zbeta) return a::cmd_zbeta(c, std::cout);
    if (*rates) return a::cmd_rates(c, std::cout);
    if (*contour) return a::cmd_contour(c, std::cout);
    if (*womble) return a::cmd_womble(c, std::cout);
    if (*plot) return a::cmd_plot(c, std::cout);
    if (*serve) return a::cmd_serve(c, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
