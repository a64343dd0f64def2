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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "httplib.h"
#include "json.hpp"

#include "gpwomble/app/archive.hpp"
#include "gpwomble/app/commands.hpp"
#include "gpwomble/app/csv.hpp"
#include "gpwomble/app/server.hpp"
#include "gpwomble/app/svg.hpp"
#include "gpwomble/errors.hpp"
#include "support.hpp"

namespace gpwomble {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gpwomble_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_dataset(const fs::path& file, const model::SpatialDataset& d) {
  std::vector<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < d.size(); ++i) rows.push_back({d.coords(i, 0), d.coords(i, 1), d.y(i)});
  app::write_csv(file, {"x", "y", "val"}, rows);
}

struct CliRun {
  int status;
  std::string out;
  std::string err;
};

CliRun run_cli(const std::string& args, const fs::path& dir) {
  const fs::path o = dir / "stdout.txt", e = dir / "stderr.txt";
  const std::string cmd = std::string(GPWOMBLE_CLI) + " " + args + " >" + o.string() + " 2>" + e.string();
  const int rc = std::system(cmd.c_str());
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, app::read_file(o), app::read_file(e)};
}

TEST(Csv, ParsesAndReportsLines) {
  const auto t = app::parse_csv("x,y,val\n1,2,3\n4,5,NA\n", "mem", {"x", "y", "val"});
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_TRUE(std::isnan(t.rows[1][2]));
  EXPECT_EQ(t.column("val"), 2u);
  try {
    app::parse_csv("x,y,val\n1,2,3\n4,oops,6\n", "mem", {"x", "y", "val"});
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  try {
    app::parse_csv("a,b\n1,2\n", "mem", {"x", "y", "val"});
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("val"), std::string::npos) << e.what();
  }
}

TEST(Csv, RoundTripsDoublesExactly) {
  const double v = 0.1 + 0.2;
  const auto t = app::parse_csv(app::to_csv({"a"}, {{v}, {-1e-300}}), "mem");
  EXPECT_EQ(t.rows[0][0], v);
  EXPECT_EQ(t.rows[1][0], -1e-300);
  EXPECT_EQ(app::format_double(NAN), "NA");
}

TEST(Archive, Sha256) {
  EXPECT_EQ(app::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Svg, ConstantFieldIsOneColourWithoutMarkers) {
  geometry::Surface s{{0, 1, 0, 1, 4, 4}, std::vector<double>(16, 2.0)};
  const std::string svg = app::render_heatmap_svg(s, {{{0.5, 0.5}, 0}}, {}, "flat");
  const auto begin = svg.find("<g id=\"heatmap\""), end = svg.find("</g>", begin);
  const std::string heat = svg.substr(begin, end - begin);
  std::set<std::string> fills;
  const std::regex fill("fill=\"(#[0-9a-f]{6})\"");
  for (auto it = std::sregex_iterator(heat.begin(), heat.end(), fill); it != std::sregex_iterator(); ++it) {
    fills.insert((*it)[1]);
  }
  EXPECT_EQ(fills.size(), 1u);
  EXPECT_EQ(svg.find("markers"), std::string::npos);
  EXPECT_NE(svg.find(">2<"), std::string::npos);
}

TEST(Svg, MarkerShapes) {
  geometry::Surface s{{0, 1, 0, 1, 2, 2}, {0, 1, 2, 3}};
  const std::string svg = app::render_heatmap_svg(s, {{{0, 0}, 1}, {{1, 1}, -1}, {{0, 1}, 0}}, {{{0, 0}, {1, 1}}}, "m");
  EXPECT_NE(svg.find("class=\"sig-pos\""), std::string::npos);
  EXPECT_NE(svg.find("class=\"sig-neg\""), std::string::npos);
  EXPECT_NE(svg.find("fill=\"none\" stroke=\"#00bcd4\""), std::string::npos);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_EQ(std::count(svg.begin(), svg.end(), '\n') > 0, true);
  EXPECT_EQ(svg.find("<circle", svg.find("sig-neg") + 1), std::string::npos);
}

TEST(Commands, ParseGrid) {
  const auto g = app::parse_grid("-10,10,-5,5,21,11");
  EXPECT_EQ(g.nx, 21);
  EXPECT_EQ(g.ymin, -5);
  EXPECT_THROW(app::parse_grid("0,1,0,1,2"), std::invalid_argument);
  EXPECT_THROW(app::parse_grid("0,1,0,1,2.5,2"), std::invalid_argument);
  EXPECT_THROW(app::parse_grid("1,0,0,1,2,2"), std::invalid_argument);
}

TEST(Commands, ResolveCurvature) {
  EXPECT_TRUE(app::resolve_curvature("auto", kernel::Family::matern52));
  EXPECT_FALSE(app::resolve_curvature("auto", kernel::Family::matern32));
  EXPECT_FALSE(app::resolve_curvature("off", kernel::Family::gaussian));
  EXPECT_THROW(app::resolve_curvature("on", kernel::Family::matern32), UnsupportedSmoothness);
  EXPECT_EQ(app::default_stride(5000), 10);
  EXPECT_EQ(app::default_stride(3), 1);
}

// A small archive shared by the CLI and server tests.
class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(scratch("pipeline"));
    write_dataset(*dir_ / "data.csv", testing::gp_dataset(12, 30, {1.0, 0.8, 0.2}, kernel::Family::matern52, 5.0));
    app::write_csv(*dir_ / "curve.csv", {"x", "y"}, {{1, 1}, {2.5, 1.5}, {4, 3.5}});
    const CliRun fit = run_cli("fit --input " + (*dir_ / "data.csv").string() + " --archive " +
                                   (*dir_ / "arc").string() + " --iterations 200 --burn-in 100 --seed 5",
                               *dir_);
    ASSERT_EQ(fit.status, 0) << fit.err;
    const CliRun zb = run_cli("zbeta --archive " + (*dir_ / "arc").string(), *dir_);
    ASSERT_EQ(zb.status, 0) << zb.err;
    // Fit only, no zbeta: for prerequisite checks.
    const CliRun partial = run_cli("fit --input " + (*dir_ / "data.csv").string() + " --archive " +
                                       (*dir_ / "fitonly").string() + " --iterations 60 --burn-in 30",
                                   *dir_);
    ASSERT_EQ(partial.status, 0) << partial.err;
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
  }
  static fs::path& dir() { return *dir_; }
  static std::string arc() { return (*dir_ / "arc").string(); }

 private:
  static fs::path* dir_;
};
fs::path* Pipeline::dir_ = nullptr;

TEST_F(Pipeline, FitArchive) {
  const auto a = app::load_archive(arc(), true);
  EXPECT_EQ(a.draws.size(), 100);
  EXPECT_EQ(a.seed(), 5u);
  EXPECT_EQ(a.family, kernel::Family::matern52);
  EXPECT_EQ(a.manifest.at("input").at("sha256"), app::sha256_file(dir() / "data.csv"));
  EXPECT_EQ(a.draws.z.rows(), 100);
  const auto t = app::read_csv(fs::path(arc()) / "theta.csv", {"iter", "sigma2", "phi", "tau2"});
  EXPECT_EQ(t.rows.front()[0], 101);
}

TEST_F(Pipeline, FitPrintsIntervals) {
  const CliRun r = run_cli("fit --input " + (dir() / "data.csv").string() + " --archive " +
                               (dir() / "short").string() + " --iterations 100 --burn-in 50",
                           dir());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("retained draws 50"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("tau2"), std::string::npos);
  EXPECT_EQ(app::read_csv(dir() / "short" / "theta.csv").rows.size(), 50u);
}

TEST_F(Pipeline, FitRejectsMissingHeader) {
  app::write_file(dir() / "bad.csv", "a,b,c\n1,2,3\n");
  const CliRun r = run_cli("fit --input " + (dir() / "bad.csv").string() + " --archive " + (dir() / "bad").string(),
                           dir());
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("x,y,val"), std::string::npos) << r.err;
}

TEST_F(Pipeline, DownstreamNeedsPrerequisites) {
  const CliRun r = run_cli("rates --archive " + (dir() / "fitonly").string() + " --out " + (dir() / "r").string(), dir());
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("zbeta"), std::string::npos) << r.err;
  const CliRun p = run_cli("plot --archive " + arc() + " --out " + (dir() / "p").string() + " --field dx", dir());
  EXPECT_NE(p.status, 0);
  EXPECT_NE(p.err.find("--rates"), std::string::npos) << p.err;
}

TEST_F(Pipeline, Matern32CurvatureRequest) {
  const std::string a32 = (dir() / "m32").string();
  ASSERT_EQ(run_cli("fit --kernel matern1 --input " + (dir() / "data.csv").string() + " --archive " + a32 +
                        " --iterations 60 --burn-in 30",
                    dir())
                .status,
            0);
  ASSERT_EQ(run_cli("zbeta --archive " + a32, dir()).status, 0);
  const CliRun r = run_cli("womble --archive " + a32 + " --curve " + (dir() / "curve.csv").string() + " --out " +
                               (dir() / "w32").string() + " --curvature on",
                           dir());
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("supports gradient wombling only"), std::string::npos) << r.err;
  const CliRun ok = run_cli("womble --archive " + a32 + " --curve " + (dir() / "curve.csv").string() + " --out " +
                                (dir() / "w32").string(),
                            dir());
  EXPECT_EQ(ok.status, 0) << ok.err;
  EXPECT_TRUE(fs::exists(dir() / "w32" / "wm1.csv"));
  EXPECT_FALSE(fs::exists(dir() / "w32" / "wm2.csv"));
}

TEST_F(Pipeline, OutputsCarryManifests) {
  ASSERT_EQ(run_cli("rates --archive " + arc() + " --grid 0,5,0,5,4,4 --out " + (dir() / "rates").string(), dir()).status,
            0);
  const json m = json::parse(app::read_file(dir() / "rates" / "manifest.json"));
  EXPECT_EQ(m.at("seed"), 5);
  EXPECT_TRUE(m.contains("config_sha256"));
  EXPECT_EQ(m.at("inputs").size(), 3u);
  const auto t = app::read_csv(dir() / "rates" / "dxx.csv", {"x", "y", "q2.5", "q50", "q97.5", "sig"});
  EXPECT_EQ(t.rows.size(), 16u);
  ASSERT_EQ(run_cli("plot --archive " + arc() + " --field dy --rates " + (dir() / "rates").string() + " --out " +
                        (dir() / "plot").string(),
                    dir())
                .status,
            0);
  EXPECT_TRUE(fs::exists(dir() / "plot" / "dy.svg"));
}

struct RunningServer {
  app::WombleServer server;
  int port;
  std::thread thread;

  explicit RunningServer(app::Archive a) : server(std::move(a)), port(server.bind("127.0.0.1", 0)) {
    thread = std::thread([this] { server.run(); });
    // stop() before the accept loop starts would be lost.
    while (!server.running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  ~RunningServer() {
    server.stop();
    thread.join();
  }
};

TEST_F(Pipeline, ServerEndpoints) {
  RunningServer rs(app::load_archive(arc(), true));
  httplib::Client cli("127.0.0.1", rs.port);
  cli.set_read_timeout(120);

  auto summary = cli.Get("/api/model/summary");
  ASSERT_TRUE(summary);
  ASSERT_EQ(summary->status, 200);
  const json sj = json::parse(summary->body);
  EXPECT_EQ(sj.at("kernel"), "matern2");
  EXPECT_EQ(sj.at("draws"), 100);

  // Same grid and stride as `contour` without --grid.
  ASSERT_EQ(run_cli("contour --archive " + arc() + " --level 0 --out " + (dir() / "ct").string(), dir()).status, 0);
  auto surface = cli.Get("/api/surface");
  ASSERT_TRUE(surface);
  ASSERT_EQ(surface->status, 200);
  const json vj = json::parse(surface->body);
  const auto csv = app::read_csv(dir() / "ct" / "surface.csv", {"x", "y", "z"});
  ASSERT_EQ(vj.at("values").size(), csv.rows.size());
  for (std::size_t i = 0; i < csv.rows.size(); ++i) EXPECT_EQ(vj["values"][i].get<double>(), csv.rows[i][2]);

  auto rates = cli.Get("/api/rates?component=dy&nx=3&ny=3");
  ASSERT_TRUE(rates);
  ASSERT_EQ(rates->status, 200);
  EXPECT_EQ(json::parse(rates->body).at("points").size(), 9u);

  auto contours = cli.Get("/api/contours?level=0&nx=21&ny=21");
  ASSERT_TRUE(contours);
  EXPECT_EQ(contours->status, 200);

  for (const char* bad : {"/api/surface?nx=1", "/api/surface?nx=abc", "/api/rates?component=dz", "/api/contours"}) {
    auto r = cli.Get(bad);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 400) << bad;
    EXPECT_TRUE(json::parse(r->body).contains("error"));
  }
}

TEST_F(Pipeline, ServerWombleMatchesCli) {
  ASSERT_EQ(run_cli("womble --archive " + arc() + " --curve " + (dir() / "curve.csv").string() + " --seed 17 --out " +
                        (dir() / "wm").string(),
                    dir())
                .status,
            0);
  const json cli_totals = json::parse(app::read_file(dir() / "wm" / "totals.json"));
  const auto wm1 = app::read_csv(dir() / "wm" / "wm1.csv");

  RunningServer rs(app::load_archive(arc(), true));
  httplib::Client cli("127.0.0.1", rs.port);
  cli.set_read_timeout(120);
  const json body{{"curve", {{1, 1}, {2.5, 1.5}, {4, 3.5}}}, {"seed", 17}};
  auto r = cli.Post("/api/womble", body.dump(), "application/json");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200) << r->body;
  const json api = json::parse(r->body);
  EXPECT_EQ(api.at("totals"), cli_totals.at("totals"));
  EXPECT_EQ(api.at("averages"), cli_totals.at("averages"));
  EXPECT_EQ(api.at("arc_length"), cli_totals.at("arc_length"));
  const json& seg = api.at("segments").at("gradient");
  ASSERT_EQ(seg.size(), wm1.rows.size());
  for (std::size_t s = 0; s < seg.size(); ++s) {
    EXPECT_EQ(seg[s].at("sig").get<int>(), static_cast<int>(wm1.rows[s][4]));
    EXPECT_EQ(seg[s].at("q50").get<double>(), wm1.rows[s][2]);
  }

  auto again = cli.Post("/api/womble", body.dump(), "application/json");
  ASSERT_TRUE(again);
  EXPECT_EQ(again->body, r->body);

  auto one = cli.Post("/api/womble", R"({"curve": [[1, 1]], "seed": 1})", "application/json");
  ASSERT_TRUE(one);
  EXPECT_EQ(one->status, 400);
  EXPECT_NE(json::parse(one->body).at("error").get<std::string>().find("at least 2"), std::string::npos);
  auto junk = cli.Post("/api/womble", "not json", "application/json");
  ASSERT_TRUE(junk);
  EXPECT_EQ(junk->status, 400);
}

TEST_F(Pipeline, ServerPortInUseAndIncompleteArchive) {
  RunningServer rs(app::load_archive(arc(), true));
  app::WombleServer second(app::load_archive(arc(), true));
  EXPECT_THROW(second.bind("127.0.0.1", rs.port), std::runtime_error);
  auto partial = app::load_archive((dir() / "fitonly").string(), false);
  EXPECT_THROW(app::WombleServer{std::move(partial)}, std::runtime_error);
}

}  // namespace
}  // namespace gpwomble
