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

#include "gpwomble/app/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gpwomble::app {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '"')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '"')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_number(const std::string& s, double& v) {
  if (s == "NA" || s == "NaN" || s == "nan") {
    v = std::numeric_limits<double>::quiet_NaN();
    return true;
  }
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  return ec == std::errc() && ptr == last && first != last;
}

std::string join(const std::vector<std::string>& parts) {
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? "," : "") + parts[i];
  return s;
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw std::runtime_error("csv: missing column '" + std::string(name) + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

CsvTable parse_csv(std::string_view text, const std::string& source,
                   const std::vector<std::string>& required) {
  CsvTable t;
  std::size_t pos = 0;
  int line_no = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line_no == 1 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      std::vector<std::string> missing;
      for (const std::string& r : required) {
        bool found = false;
        for (const std::string& h : t.header) found = found || h == r;
        if (!found) missing.push_back(r);
      }
      if (!missing.empty()) {
        throw std::runtime_error(source + ": line " + std::to_string(line_no) +
                                 ": header must contain columns " + join(required) + " (missing " +
                                 join(missing) + ")");
      }
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw std::runtime_error(source + ": line " + std::to_string(line_no) + ": expected " +
                               std::to_string(t.header.size()) + " fields, found " +
                               std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (!parse_number(fields[i], row[i])) {
        throw std::runtime_error(source + ": line " + std::to_string(line_no) + ": column '" +
                                 t.header[i] + "': not a number: '" + fields[i] + "'");
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (!have_header) {
    throw std::runtime_error(source + ": empty file; header must contain columns " + join(required));
  }
  return t;
}

CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& required) {
  return parse_csv(read_file(path), path.string(), required);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::string s = join(header) + "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) s += ',';
      s += format_double(row[i]);
    }
    s += '\n';
  }
  return s;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  write_file(path, to_csv(header, rows));
}

model::SpatialDataset read_dataset(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path, {"x", "y", "val"});
  const std::size_t cx = t.column("x"), cy = t.column("y"), cv = t.column("val");
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  Eigen::MatrixXd coords(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    coords(i, 0) = t.rows[i][cx];
    coords(i, 1) = t.rows[i][cy];
    y[i] = t.rows[i][cv];
    if (!std::isfinite(coords(i, 0)) || !std::isfinite(coords(i, 1)) || !std::isfinite(y[i])) {
      throw std::runtime_error(path.string() + ": data row " + std::to_string(i + 1) +
                               ": missing or non-finite value");
    }
  }
  try {
    return model::make_dataset(std::move(coords), std::move(y));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::vector<Point> read_curve(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path, {"x", "y"});
  const std::size_t cx = t.column("x"), cy = t.column("y");
  std::vector<Point> pts;
  pts.reserve(t.rows.size());
  for (const auto& r : t.rows) pts.emplace_back(r[cx], r[cy]);
  return pts;
}

}  // namespace gpwomble::app
