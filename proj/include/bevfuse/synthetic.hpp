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

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bevfuse/geometry.hpp"
#include "bevfuse/lgvt.hpp"
#include "bevfuse/tda.hpp"

namespace bevfuse {

/// Axis-aligned (in the ego frame) object with a per-channel feature
/// fingerprint. Velocity is in world metres per frame.
struct Box {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector2d half_extent = Eigen::Vector2d::Ones();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  Eigen::VectorXd signature;

  Eigen::Vector3d center_at(std::size_t frame) const {
    Eigen::Vector3d c = center;
    c.head<2>() += static_cast<double>(frame) * velocity;
    return c;
  }
};

struct Scene {
  std::uint64_t seed = 0;
  BevSpec spec;
  std::size_t image_height = 64;
  std::size_t image_width = 64;
  std::vector<CameraModel> rig;  // extrinsics relative to the ego frame
  std::vector<EgoPose> ego;      // one pose per frame
  std::vector<Box> boxes;
  std::size_t channels = 8;

  std::size_t frames() const { return ego.size(); }
  void validate() const;
};

inline constexpr double kImageSigma = 1.5;

/// Signature splat over every cell whose centre lies inside a box footprint;
/// overlapping boxes combine by element-wise maximum.
BevFeature render_lidar_bev(const Scene& scene, std::size_t t);

/// Peak-normalised Gaussian (sigma 1.5 px, truncated at 3 sigma) of each
/// visible box centre, accumulated per view.
ImageFeatureSet render_image_features(const Scene& scene, std::size_t t);

/// Evaluation target. Same rendering as render_lidar_bev, kept separate so
/// evaluation code never reads a pipeline input by accident.
BevFeature ground_truth_bev(const Scene& scene, std::size_t t);

struct Cell {
  std::size_t i = 0;
  std::size_t j = 0;
};

/// Argmax of |channel 0|, ties resolved toward the lowest (i, j).
Cell peak_cell(const BevFeature& feature);

/// Euclidean distance in cells between the channel-0 peaks. Throws
/// std::domain_error if the truth is identically zero.
double peak_displacement_error(const BevFeature& feature, const BevFeature& truth);

// Seeded scene families.

/// 64 x 64 grid of 0.5 m cells centred on the ego, four pillar heights.
BevSpec default_spec(std::size_t cells = 64, double cell_size = 0.5,
                     std::vector<double> heights = {0.0, 0.5, 1.0, 1.5});

/// Elevated cameras placed around the grid, all looking at its centre.
std::vector<CameraModel> default_rig(const BevSpec& spec, std::size_t image_height,
                                     std::size_t image_width, std::size_t cameras = 2);

/// Single one-cell beacon (channel 0 = 1) at a random interior cell and a
/// random height inside the pillar range. One frame, ego at the origin.
Scene beacon_scene(std::uint64_t seed, const BevSpec& spec);

/// Static box seen from a random ego trajectory whose per-step motion is at
/// most `max_step_cells` cells.
Scene static_scene(std::uint64_t seed, const BevSpec& spec, std::size_t frames = 5,
                   double max_step_cells = 5.0);

/// Box moving along +x at `speed_cells` cells per frame while the ego drives
/// forward; the box ends near the grid centre.
Scene moving_blob_scene(std::uint64_t seed, const BevSpec& spec, double speed_cells,
                        std::size_t frames = 5);

/// Fused-frame stand-ins (LiDAR renders) and the last-frame ground truth.
TrainingSample training_sample(const Scene& scene);

/// The fixed-seed moving-blob family used by the TDA training experiment.
std::vector<TrainingSample> moving_blob_family(std::uint64_t seed, std::size_t count,
                                               const BevSpec& spec, double speed_cells,
                                               std::size_t frames);

/// Channel-0 support length along x, in cells: the extent between the first
/// and last grid column holding a value above `threshold`.
std::size_t support_extent_x(const BevFeature& feature, double threshold = 1e-9);

}  // namespace bevfuse
