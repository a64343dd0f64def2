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

#include <string>
#include <string_view>
#include <vector>

#include "gpwomble/geometry.hpp"

namespace gpwomble::app {

struct SigMarker {
  Point location;
  int sig = 0;  // +1 filled green circle, -1 hollow cyan circle, 0 not drawn
};

/// Heatmap of a gridded field with significance markers and optional
/// polyline overlays. Output is deterministic text.
std::string render_heatmap_svg(const geometry::Surface& field, const std::vector<SigMarker>& markers,
                               const std::vector<geometry::Polyline>& curves, std::string_view title);

}  // namespace gpwomble::app
