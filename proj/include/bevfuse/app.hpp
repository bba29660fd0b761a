// Copyright 2026 The bevfuse Authors
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

// End-to-end runners behind the command-line tool. Each returns a process
// exit status and writes its artifacts into the configured directory.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bevfuse/geometry.hpp"
#include "bevfuse/synthetic.hpp"

namespace bevfuse {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailed = 1,  // ran to completion but a checked property did not hold
  kExitUsage = 2,
  kExitNumeric = 3,
  kExitDivergence = 4,
};

struct RunConfig {
  std::filesystem::path scene_path;
  std::size_t layers = 3;
  /// Pillar sample count. Empty keeps the scene's own heights; otherwise the
  /// scene's height range is resampled evenly with this many points.
  std::optional<std::size_t> heights;
  std::size_t frames = 5;
  std::size_t heads = 4;
  std::size_t points = 4;
  std::uint64_t seed = 7;
  std::filesystem::path output_dir = ".";
};

/// `count` evenly spaced heights over [lo, hi]; a single height sits at the
/// midpoint.
std::vector<double> pillar_heights(std::size_t count, double lo, double hi);

struct PipelineStages {
  BevFeature lidar;     // last frame
  BevFeature camera;    // last frame, after all view-transformer layers
  BevFeature fused;     // last frame
  BevFeature temporal;  // all frames fused into the last ego frame
  BevFeature truth;     // last frame
};

/// Renders the last `config.frames` frames of the scene and runs view
/// transformation, spatial fusion and temporal fusion with seeded
/// parameters: identity-style attention, random query reductions and an
/// averaging fusion convolution. Throws ShapeError if the scene has fewer
/// frames than requested and NumericError on non-finite output.
PipelineStages run_pipeline(const Scene& scene, const RunConfig& config);

int run_demo(const RunConfig& config, std::ostream& err);
/// suite is one of suite_names() or "all".
int run_verify(const std::string& suite, std::ostream& out, std::ostream& err);
int run_train_tda(const RunConfig& config, std::size_t steps, double lr, std::ostream& err);

}  // namespace bevfuse
