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
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gpwomble/kernel.hpp"
#include "gpwomble/model.hpp"

namespace gpwomble::app {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

nlohmann::json to_json(const model::McmcConfig& config);
nlohmann::json to_json(const stats::IntervalSummary& s);

/// A model archive directory: manifest.json, data.csv (x,y,val),
/// theta.csv (iter,sigma2,phi,tau2) and, after zbeta, z.csv (M x N) and
/// beta.csv (M x p).
struct Archive {
  std::filesystem::path dir;
  nlohmann::json manifest;
  model::SpatialDataset data;
  kernel::Family family = kernel::Family::matern52;
  model::McmcConfig config;
  model::PosteriorDraws draws;  // z and beta empty until zbeta has run

  std::uint64_t seed() const { return config.seed; }
  bool has_latent() const { return draws.has_latent(); }
};

/// Writes a fresh archive (removing stale z.csv / beta.csv).
void write_fit_archive(const std::filesystem::path& dir, const std::filesystem::path& input,
                       const model::SpatialDataset& data, kernel::Family family,
                       const model::McmcConfig& config, const model::FitResult& fit);

/// Adds z.csv and beta.csv and records them in the manifest.
void write_latent(Archive& archive, const model::PosteriorDraws& draws, std::uint64_t seed);

/// Throws std::runtime_error naming the missing piece. With require_latent the
/// z.csv / beta.csv draws must be present and aligned with theta.csv.
Archive load_archive(const std::filesystem::path& dir, bool require_latent);

/// manifest.json for a derived output directory: command, seed, config and
/// its digest, digests of every input file and of every output file.
void write_output_manifest(const std::filesystem::path& out_dir, std::string_view command,
                           std::uint64_t seed, const nlohmann::json& config,
                           const std::vector<std::filesystem::path>& inputs,
                           const std::vector<std::string>& outputs);

}  // namespace gpwomble::app
