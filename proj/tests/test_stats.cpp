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

#include <algorithm>
#include <numeric>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "gpwomble/stats.hpp"

namespace gpwomble {
namespace {

TEST(Summarize, ConstantChain) {
  const std::vector<double> c(100, 3.5);
  const auto s = stats::summarize(c);
  EXPECT_EQ(s.lo, 3.5);
  EXPECT_EQ(s.median, 3.5);
  EXPECT_EQ(s.hi, 3.5);
}

TEST(Summarize, OneToThousand) {
  std::vector<double> c(1000);
  std::iota(c.begin(), c.end(), 1.0);
  const auto s = stats::summarize(c);
  EXPECT_DOUBLE_EQ(s.median, 500.5);
  EXPECT_DOUBLE_EQ(s.lo, 25.975);
  EXPECT_DOUBLE_EQ(s.hi, 975.025);
}

TEST(Quantile, SortReference) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> n;
  std::vector<double> x(10000);
  for (double& v : x) v = n(gen);
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  for (double p : {0.0, 0.025, 0.5, 0.9, 1.0}) {
    const double h = (sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(h);
    const double ref = lo + 1 < sorted.size() ? sorted[lo] + (h - lo) * (sorted[lo + 1] - sorted[lo]) : sorted[lo];
    EXPECT_DOUBLE_EQ(stats::quantile(x, p), ref);
  }
}

TEST(Quantile, Errors) {
  EXPECT_THROW(stats::quantile(std::vector<double>{}, 0.5), std::invalid_argument);
  EXPECT_THROW(stats::quantile(std::vector<double>{1.0}, 1.5), std::invalid_argument);
}

TEST(Significance, Sign) {
  EXPECT_EQ(stats::significance({0.1, 0.5, 1.0}), 1);
  EXPECT_EQ(stats::significance({-1.0, -0.5, -0.1}), -1);
  EXPECT_EQ(stats::significance({-1.0, 0.5, 1.0}), 0);
  EXPECT_EQ(stats::significance({0.0, 0.5, 1.0}), 0);
}

TEST(Moments, MeanVariance) {
  const std::vector<double> x{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(stats::mean(x), 2.5);
  EXPECT_DOUBLE_EQ(stats::variance(x), 5.0 / 3.0);
}

}  // namespace
}  // namespace gpwomble
