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

#include <span>
#include <vector>

namespace gpwomble::stats {

/// Empirical quantile with linear interpolation between order statistics
/// (h = (n-1)p). `sorted` must be ascending and nonempty.
double quantile_sorted(std::span<const double> sorted, double p);
/// Copies and sorts; throws std::invalid_argument on an empty sample.
double quantile(std::span<const double> sample, double p);

struct IntervalSummary {
  double lo = 0.0;      ///< 2.5%
  double median = 0.0;  ///< 50%
  double hi = 0.0;      ///< 97.5%
};

IntervalSummary summarize(std::span<const double> sample);

/// +1 if lo > 0, -1 if hi < 0, else 0.
int significance(const IntervalSummary& s) noexcept;

double mean(std::span<const double> sample);
/// Unbiased sample variance; 0 for fewer than two values.
double variance(std::span<const double> sample);

}  // namespace gpwomble::stats
