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

#include "gpwomble/app/server.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

#include <spdlog/spdlog.h>

#include "httplib.h"

#include "gpwomble/app/commands.hpp"
#include "gpwomble/errors.hpp"

namespace gpwomble::app {

using nlohmann::json;

namespace {

constexpr int kDefaultSurface = 81;
constexpr int kDefaultRates = 21;
constexpr int kMaxGrid = 401;

// Client errors become 400 responses.
struct BadRequest : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

long long query_int(const httplib::Request& req, const char* name, long long fallback, long long lo,
                    long long hi) {
  if (!req.has_param(name)) return fallback;
  const std::string v = req.get_param_value(name);
  long long x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size() || x < lo || x > hi) {
    throw BadRequest(std::string("query parameter '") + name + "' must be an integer in [" +
                     std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return x;
}

double query_double(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) throw BadRequest(std::string("missing query parameter '") + name + "'");
  const std::string v = req.get_param_value(name);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(x)) {
    throw BadRequest(std::string("query parameter '") + name + "' must be a finite number");
  }
  return x;
}

json points_json(const std::vector<geometry::Polyline>& lines) {
  json out = json::array();
  for (const auto& line : lines) {
    json l = json::array();
    for (const Point& p : line) l.push_back({p.x(), p.y()});
    out.push_back(l);
  }
  return out;
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

struct WombleServer::Impl {
  Archive archive;
  httplib::Server http;
  bool bound = false;

  std::mutex surface_mutex;
  std::map<std::pair<int, int>, std::shared_ptr<const geometry::Surface>> surfaces;
  std::mutex rates_mutex;
  std::map<std::tuple<int, int, std::uint64_t>, std::shared_ptr<const rates::RatesResult>> rates_cache;

  explicit Impl(Archive a) : archive(std::move(a)) {
    // httplib's default adds SO_REUSEPORT, which lets a second server share
    // the port silently; keep only SO_REUSEADDR so "port in use" is reported.
    http.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    routes();
  }

  std::shared_ptr<const geometry::Surface> surface(int nx, int ny) {
    std::lock_guard<std::mutex> lock(surface_mutex);
    auto& slot = surfaces[{nx, ny}];
    if (!slot) {
      slot = std::make_shared<const geometry::Surface>(
          compute_surface(archive, default_grid(archive.data, nx, ny), 0));
    }
    return slot;
  }

  json summary() const {
    json j;
    j["kernel"] = std::string(kernel::family_name(archive.family));
    j["n"] = archive.data.size();
    j["draws"] = archive.draws.size();
    j["seed"] = archive.seed();
    j["curvature"] = kernel::supports_curvature(archive.family);
    if (archive.draws.theta.size() >= 2) {
      const model::ThetaSummary s = model::summarize_chain(archive.draws.theta);
      j["theta"] = {{"sigma2", to_json(s.sigma2)}, {"phi", to_json(s.phi)}, {"tau2", to_json(s.tau2)}};
    }
    json beta = json::array();
    for (Eigen::Index k = 0; k < archive.draws.beta.cols(); ++k) {
      std::vector<double> col(archive.draws.beta.col(k).data(),
                              archive.draws.beta.col(k).data() + archive.draws.beta.rows());
      beta.push_back(to_json(stats::summarize(col)));
    }
    j["beta"] = beta;
    j["bounds"] = grid_json(default_grid(archive.data, kDefaultSurface, kDefaultSurface));
    return j;
  }

  json surface_json(int nx, int ny) {
    const auto s = surface(nx, ny);
    json values = json::array();
    for (double v : s->values) values.push_back(nullable(v));
    const auto [lo, hi] = s->range();
    return {{"grid", grid_json(s->grid)}, {"values", values}, {"min", nullable(lo)}, {"max", nullable(hi)}};
  }

  json rates_json(const std::string& component, int nx, int ny, std::uint64_t seed) {
    int comp = 0;
    try {
      comp = rates::parse_component(component);
    } catch (const std::invalid_argument& e) {
      throw BadRequest(e.what());
    }
    const bool curvature = kernel::supports_curvature(archive.family);
    if (comp >= 2 && !curvature) {
      throw BadRequest("kernel " + std::string(kernel::family_name(archive.family)) +
                       " has no curvature process; use dx or dy");
    }
    std::shared_ptr<const rates::RatesResult> r;
    const geometry::GridSpec grid = default_grid(archive.data, nx, ny);
    {
      std::lock_guard<std::mutex> lock(rates_mutex);
      auto& slot = rates_cache[{nx, ny, seed}];
      if (!slot) slot = std::make_shared<const rates::RatesResult>(compute_rates(archive, grid, seed, curvature));
      r = slot;
    }
    json points = json::array();
    for (Eigen::Index g = 0; g < r->num_points(); ++g) {
      json p = to_json(r->at(g, comp));
      p["x"] = r->grid(g, 0);
      p["y"] = r->grid(g, 1);
      p["sig"] = r->sig_at(g, comp);
      points.push_back(p);
    }
    return {{"component", component}, {"grid", grid_json(grid)}, {"seed", seed}, {"points", points}};
  }

  json womble_json(const std::string& body) {
    json req;
    try {
      req = json::parse(body);
    } catch (const json::parse_error& e) {
      throw BadRequest(std::string("request body is not valid JSON: ") + e.what());
    }
    if (!req.is_object() || !req.contains("curve") || !req["curve"].is_array()) {
      throw BadRequest("body must be {\"curve\": [[x, y], ...], \"seed\": int}");
    }
    std::vector<Point> curve;
    for (const json& p : req["curve"]) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        throw BadRequest("each curve vertex must be a [x, y] pair of numbers");
      }
      curve.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    if (curve.size() < 2) throw BadRequest("curve needs at least 2 vertices, got " + std::to_string(curve.size()));
    std::uint64_t seed = archive.seed();
    if (req.contains("seed")) {
      if (!req["seed"].is_number_integer() || req["seed"].get<long long>() < 0) {
        throw BadRequest("seed must be a non-negative integer");
      }
      seed = req["seed"].get<std::uint64_t>();
    }
    const std::string mode = req.value("curvature", std::string("auto"));
    bool curvature = false;
    try {
      curvature = resolve_curvature(mode, archive.family);
    } catch (const std::invalid_argument& e) {
      throw BadRequest(e.what());
    }
    womble::WomblingResult r;
    try {
      r = compute_wombling(archive, curve, seed, curvature);
    } catch (const std::invalid_argument& e) {
      throw BadRequest(e.what());
    }
    json out = wombling_totals_json(r);
    out["segments"] = wombling_segments_json(r);
    out["seed"] = seed;
    return out;
  }

  template <class F>
  void handle(httplib::Response& res, F&& f) {
    try {
      res.set_content(f().dump(), "application/json");
    } catch (const BadRequest& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    } catch (const std::exception& e) {
      spdlog::error("request failed: {}", e.what());
      res.status = 500;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  }

  void routes() {
    http.Get("/api/model/summary", [this](const httplib::Request&, httplib::Response& res) {
      handle(res, [&] { return summary(); });
    });
    http.Get("/api/surface", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        const int nx = static_cast<int>(query_int(req, "nx", kDefaultSurface, 2, kMaxGrid));
        const int ny = static_cast<int>(query_int(req, "ny", kDefaultSurface, 2, kMaxGrid));
        return surface_json(nx, ny);
      });
    });
    http.Get("/api/rates", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        const std::string comp = req.has_param("component") ? req.get_param_value("component") : "dx";
        const int nx = static_cast<int>(query_int(req, "nx", kDefaultRates, 2, kMaxGrid));
        const int ny = static_cast<int>(query_int(req, "ny", kDefaultRates, 2, kMaxGrid));
        const auto seed = static_cast<std::uint64_t>(
            query_int(req, "seed", static_cast<long long>(archive.seed()), 0, std::numeric_limits<long long>::max()));
        return rates_json(comp, nx, ny, seed);
      });
    });
    http.Get("/api/contours", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        const double level = query_double(req, "level");
        const int nx = static_cast<int>(query_int(req, "nx", kDefaultSurface, 2, kMaxGrid));
        const int ny = static_cast<int>(query_int(req, "ny", kDefaultSurface, 2, kMaxGrid));
        const auto s = surface(nx, ny);
        return json{{"level", level}, {"contours", points_json(geometry::extract_contours(*s, level))}};
      });
    });
    http.Post("/api/womble", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { return womble_json(req.body); });
    });
  }
};

WombleServer::WombleServer(Archive archive) : impl_(std::make_unique<Impl>(std::move(archive))) {
  if (!impl_->archive.has_latent()) {
    throw std::runtime_error("archive incomplete: z.csv is missing; run `gpwomble zbeta` first");
  }
}

WombleServer::~WombleServer() { stop(); }

int WombleServer::bind(const std::string& host, int port) {
  int bound = -1;
  if (port == 0) {
    bound = impl_->http.bind_to_any_port(host);
  } else if (impl_->http.bind_to_port(host, port)) {
    bound = port;
  }
  if (bound <= 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port) + " (port in use?)");
  impl_->bound = true;
  return bound;
}

void WombleServer::run() {
  if (!impl_->bound) throw std::logic_error("WombleServer::run before bind");
  impl_->http.listen_after_bind();
}

bool WombleServer::running() const { return impl_->http.is_running(); }

void WombleServer::stop() {
  if (impl_) impl_->http.stop();
}

}  // namespace gpwomble::app
