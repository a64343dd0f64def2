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

#include <stdexcept>
#include <string>

namespace gpwomble {

/// The kernel family is not smooth enough for the requested derivative order
/// (matern32 has no third or fourth derivative at the origin).
class UnsupportedSmoothness : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Cholesky failed even after the maximum jitter escalation.
class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(const std::string& what, double attempted_jitter)
      : std::runtime_error(what), jitter_(attempted_jitter) {}

  double attempted_jitter() const noexcept { return jitter_; }

 private:
  double jitter_;
};

/// Every Metropolis proposal was rejected for too many consecutive iterations.
class McmcDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gpwomble
