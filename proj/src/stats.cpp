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

#include "gpwomble/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gpwomble::stats {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p outside [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> sample, double p) {
  std::vector<double> v(sample.begin(), sample.end());
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, p);
}

IntervalSummary summarize(std::span<const double> sample) {
  std::vector<double> v(sample.begin(), sample.end());
  if (v.empty()) throw std::invalid_argument("summarize: empty sample");
  std::sort(v.begin(), v.end());
  return {quantile_sorted(v, 0.025), quantile_sorted(v, 0.5), quantile_sorted(v, 0.975)};
}

int significance(const IntervalSummary& s) noexcept {
  if (s.lo > 0.0) return 1;
  if (s.hi < 0.0) return -1;
  return 0;
}

double mean(std::span<const double> sample) {
  if (sample.empty()) throw std::invalid_argument("mean: empty sample");
  return std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(sample.size());
}

double variance(std::span<const double> sample) {
  if (sample.size() < 2) return 0.0;
  const double m = mean(sample);
  double ss = 0.0;
  for (double x : sample) ss += (x - m) * (x - m);
  return ss / static_cast<double>(sample.size() - 1);
}

}  // namespace gpwomble::stats
