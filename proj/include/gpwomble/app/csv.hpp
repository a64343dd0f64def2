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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "gpwomble/kernel.hpp"
#include "gpwomble/model.hpp"

namespace gpwomble::app {

/// Numeric CSV with a header row. Empty lines are skipped; "NA" reads as NaN.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a column; throws std::runtime_error naming the column.
  std::size_t column(std::string_view name) const;
};

/// Throws std::runtime_error with the file name and 1-based line number on
/// malformed input, or naming the required columns when the header lacks any.
CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& required = {});
CsvTable parse_csv(std::string_view text, const std::string& source,
                   const std::vector<std::string>& required = {});

/// Shortest representation that reads back to the same double; NaN as "NA".
std::string format_double(double v);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);

/// Columns x, y, val; intercept-only design.
model::SpatialDataset read_dataset(const std::filesystem::path& path);
/// Columns x, y in vertex order.
std::vector<Point> read_curve(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace gpwomble::app
