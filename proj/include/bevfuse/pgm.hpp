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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bevfuse/geometry.hpp"

namespace bevfuse {

/// Per-cell L2 norm over channels, laid out row-major with j as the row
/// and i as the column.
std::vector<double> magnitude_map(const BevFeature& feature);

struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
  /// Range mapped onto [0, 255]; a constant map encodes as all zeros.
  double min = 0.0;
  double max = 0.0;
};

PgmImage encode_magnitude(const BevFeature& feature);

/// Binary P5 bytes with maxval 255.
std::string pgm_bytes(const PgmImage& image);
void write_pgm(const PgmImage& image, const std::filesystem::path& path);
PgmImage read_pgm(const std::filesystem::path& path);

}  // namespace bevfuse
