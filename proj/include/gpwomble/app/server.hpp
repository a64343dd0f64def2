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

#include <memory>
#include <string>

#include "gpwomble/app/archive.hpp"

namespace gpwomble::app {

/// HTTP JSON API over one loaded archive:
///   GET  /api/model/summary
///   GET  /api/surface?nx=&ny=
///   GET  /api/rates?component=&nx=&ny=&seed=
///   GET  /api/contours?level=&nx=&ny=
///   POST /api/womble  {"curve": [[x, y], ...], "seed": int, "curvature": "auto"|"on"|"off"}
/// The archive is shared read-only between request threads.
class WombleServer {
 public:
  explicit WombleServer(Archive archive);
  ~WombleServer();
  WombleServer(const WombleServer&) = delete;
  WombleServer& operator=(const WombleServer&) = delete;

  /// Binds to host:port (port 0 picks a free one) and returns the port.
  /// Throws std::runtime_error when the port cannot be bound.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Requires a successful bind().
  void run();
  /// True once run() is accepting connections.
  bool running() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gpwomble::app
