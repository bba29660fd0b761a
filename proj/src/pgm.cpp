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

#include "bevfuse/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bevfuse/errors.hpp"

namespace bevfuse {

std::vector<double> magnitude_map(const BevFeature& feature) {
  const std::size_t nx = feature.spec.cells_x, ny = feature.spec.cells_y;
  std::vector<double> out(nx * ny);
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) out[j * nx + i] = feature.cell(i, j).norm();
  return out;
}

PgmImage encode_magnitude(const BevFeature& feature) {
  PgmImage img;
  img.width = feature.spec.cells_x;
  img.height = feature.spec.cells_y;
  const std::vector<double> mag = magnitude_map(feature);
  const auto [lo, hi] = std::minmax_element(mag.begin(), mag.end());
  img.min = *lo;
  img.max = *hi;
  img.pixels.resize(mag.size(), 0);
  if (img.max > img.min) {
    const double scale = 255.0 / (img.max - img.min);
    for (std::size_t k = 0; k < mag.size(); ++k) {
      img.pixels[k] = static_cast<std::uint8_t>(std::lround((mag[k] - img.min) * scale));
    }
  }
  return img;
}

std::string pgm_bytes(const PgmImage& image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) +
                    "\n255\n";
  out.append(image.pixels.begin(), image.pixels.end());
  return out;
}

void write_pgm(const PgmImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::string bytes = pgm_bytes(image);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

PgmImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string magic;
  int maxval = 0;
  PgmImage img;
  in >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || maxval != 255) throw ParseError(path.string() + ": not a P5/255 PGM");
  in.get();
  img.pixels.resize(img.width * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw ParseError(path.string() + ": truncated pixel data");
  return img;
}

}  // namespace bevfuse
