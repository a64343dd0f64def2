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

#include "gpwomble/app/archive.hpp"

#include <cmath>
#include <stdexcept>

#include <openssl/evp.h>

#include "gpwomble/app/csv.hpp"

namespace gpwomble::app {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

json to_json(const model::McmcConfig& c) {
  return {{"iterations", c.iterations},
          {"burn_in", c.burn_in},
          {"thin", c.thin},
          {"seed", c.seed},
          {"target_acceptance", c.target_acceptance},
          {"adaptation_exponent", c.adaptation_exponent},
          {"initial_step", c.initial_step},
          {"max_stalled_iterations", c.max_stalled_iterations},
          {"priors",
           {{"phi_max", c.priors.phi_max},
            {"sigma2_shape", c.priors.sigma2_shape},
            {"sigma2_rate", c.priors.sigma2_rate},
            {"tau2_shape", c.priors.tau2_shape},
            {"tau2_rate", c.priors.tau2_rate}}}};
}

json to_json(const stats::IntervalSummary& s) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"q2.5", num(s.lo)}, {"q50", num(s.median)}, {"q97.5", num(s.hi)}};
}

namespace {

model::McmcConfig config_from_json(const json& j) {
  model::McmcConfig c;
  c.iterations = j.at("iterations").get<int>();
  c.burn_in = j.at("burn_in").get<int>();
  c.thin = j.at("thin").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.target_acceptance = j.at("target_acceptance").get<double>();
  c.adaptation_exponent = j.at("adaptation_exponent").get<double>();
  c.initial_step = j.at("initial_step").get<double>();
  c.max_stalled_iterations = j.at("max_stalled_iterations").get<int>();
  const json& p = j.at("priors");
  c.priors.phi_max = p.at("phi_max").get<double>();
  c.priors.sigma2_shape = p.at("sigma2_shape").get<double>();
  c.priors.sigma2_rate = p.at("sigma2_rate").get<double>();
  c.priors.tau2_shape = p.at("tau2_shape").get<double>();
  c.priors.tau2_rate = p.at("tau2_rate").get<double>();
  return c;
}

std::vector<std::string> numbered(const std::string& prefix, Eigen::Index n) {
  std::vector<std::string> h;
  for (Eigen::Index i = 1; i <= n; ++i) h.push_back(prefix + std::to_string(i));
  return h;
}

std::vector<std::vector<double>> rows_of(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows[i].resize(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
  }
  return rows;
}

Eigen::MatrixXd matrix_of(const CsvTable& t) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < t.header.size(); ++j) m(i, j) = t.rows[i][j];
  }
  return m;
}

void write_manifest(const fs::path& dir, const json& manifest) {
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace

void write_fit_archive(const fs::path& dir, const fs::path& input, const model::SpatialDataset& data,
                       kernel::Family family, const model::McmcConfig& config,
                       const model::FitResult& fit) {
  fs::create_directories(dir);
  fs::remove(dir / "z.csv");
  fs::remove(dir / "beta.csv");

  std::vector<std::vector<double>> data_rows;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    data_rows.push_back({data.coords(i, 0), data.coords(i, 1), data.y[i]});
  }
  write_csv(dir / "data.csv", {"x", "y", "val"}, data_rows);

  std::vector<std::vector<double>> theta_rows;
  for (std::size_t m = 0; m < fit.chain.size(); ++m) {
    const model::ThetaDraw& t = fit.chain[m];
    theta_rows.push_back({static_cast<double>(fit.iteration[m]), t.sigma2, t.phi, t.tau2});
  }
  write_csv(dir / "theta.csv", {"iter", "sigma2", "phi", "tau2"}, theta_rows);

  json manifest;
  manifest["format"] = "gpwomble-archive/1";
  manifest["kernel"] = std::string(kernel::family_name(family));
  manifest["seed"] = config.seed;
  manifest["config"] = to_json(config);
  manifest["config_sha256"] = sha256_hex(to_json(config).dump());
  manifest["input"] = {{"path", input.string()}, {"sha256", sha256_file(input)}};
  manifest["data_sha256"] = sha256_file(dir / "data.csv");
  manifest["design"] = "intercept";
  json fitj;
  fitj["retained"] = fit.chain.size();
  fitj["acceptance"] = {{"sigma2", fit.acceptance[0]}, {"phi", fit.acceptance[1]}, {"tau2", fit.acceptance[2]}};
  if (fit.chain.size() >= 2) {
    fitj["summary"] = {{"sigma2", to_json(fit.summary.sigma2)},
                       {"phi", to_json(fit.summary.phi)},
                       {"tau2", to_json(fit.summary.tau2)}};
  }
  manifest["fit"] = fitj;
  manifest["files"] = {{"data.csv", manifest["data_sha256"]}, {"theta.csv", sha256_file(dir / "theta.csv")}};
  write_manifest(dir, manifest);
}

void write_latent(Archive& archive, const model::PosteriorDraws& draws, std::uint64_t seed) {
  write_csv(archive.dir / "z.csv", numbered("z", draws.z.cols()), rows_of(draws.z));
  write_csv(archive.dir / "beta.csv", numbered("beta", draws.beta.cols()), rows_of(draws.beta));
  archive.manifest["zbeta"] = {{"seed", seed}, {"draws", draws.size()}};
  archive.manifest["files"]["z.csv"] = sha256_file(archive.dir / "z.csv");
  archive.manifest["files"]["beta.csv"] = sha256_file(archive.dir / "beta.csv");
  write_manifest(archive.dir, archive.manifest);
  archive.draws.z = draws.z;
  archive.draws.beta = draws.beta;
}

Archive load_archive(const fs::path& dir, bool require_latent) {
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("archive " + dir.string() + " does not exist; run `gpwomble fit` first");
  }
  for (const char* name : {"manifest.json", "data.csv", "theta.csv"}) {
    if (!fs::exists(dir / name)) {
      throw std::runtime_error("archive incomplete: " + (dir / name).string() +
                               " is missing; run `gpwomble fit` first");
    }
  }
  Archive a;
  a.dir = dir;
  try {
    a.manifest = json::parse(read_file(dir / "manifest.json"));
    a.family = kernel::parse_family(a.manifest.at("kernel").get<std::string>());
    a.config = config_from_json(a.manifest.at("config"));
  } catch (const std::exception& e) {
    throw std::runtime_error("archive " + dir.string() + ": invalid manifest.json: " + e.what());
  }
  a.data = read_dataset(dir / "data.csv");

  const CsvTable theta = read_csv(dir / "theta.csv", {"iter", "sigma2", "phi", "tau2"});
  const std::size_t ci = theta.column("iter"), cs = theta.column("sigma2"), cp = theta.column("phi"),
                    ct = theta.column("tau2");
  for (const auto& r : theta.rows) {
    a.draws.theta.push_back({r[cs], r[cp], r[ct]});
    a.draws.iteration.push_back(static_cast<int>(r[ci]));
  }
  if (a.draws.theta.empty()) throw std::runtime_error("archive " + dir.string() + ": theta.csv has no draws");
  a.draws.meta = {a.family, a.config};

  const bool have_z = fs::exists(dir / "z.csv") && fs::exists(dir / "beta.csv");
  if (have_z) {
    a.draws.z = matrix_of(read_csv(dir / "z.csv"));
    a.draws.beta = matrix_of(read_csv(dir / "beta.csv"));
    const auto m = static_cast<Eigen::Index>(a.draws.theta.size());
    if (a.draws.z.rows() != m || a.draws.beta.rows() != m || a.draws.z.cols() != a.data.size()) {
      throw std::runtime_error("archive " + dir.string() +
                               ": z.csv / beta.csv are not aligned with theta.csv; rerun `gpwomble zbeta`");
    }
  } else if (require_latent) {
    throw std::runtime_error("archive incomplete: " + (dir / "z.csv").string() +
                             " is missing; run `gpwomble zbeta` first");
  }
  return a;
}

void write_output_manifest(const fs::path& out_dir, std::string_view command, std::uint64_t seed,
                           const json& config, const std::vector<fs::path>& inputs,
                           const std::vector<std::string>& outputs) {
  json m;
  m["command"] = std::string(command);
  m["seed"] = seed;
  m["config"] = config;
  m["config_sha256"] = sha256_hex(config.dump());
  json in = json::array();
  for (const fs::path& p : inputs) in.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  m["inputs"] = in;
  json out = json::object();
  for (const std::string& name : outputs) out[name] = sha256_file(out_dir / name);
  m["outputs"] = out;
  write_manifest(out_dir, m);
}

}  // namespace gpwomble::app
