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
#include <vector>

#include "bevfuse/tensor.hpp"

namespace bevfuse {

/// Pinhole camera. `extrinsics` maps ego/world homogeneous points into the
/// camera frame (z forward); width/height are feature-map pixels.
struct CameraModel {
  Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();
  Eigen::Matrix4d extrinsics = Eigen::Matrix4d::Identity();
  std::size_t width = 1;
  std::size_t height = 1;

  double fx() const { return intrinsics(0, 0); }
  double fy() const { return intrinsics(1, 1); }
  double cx() const { return intrinsics(0, 2); }
  double cy() const { return intrinsics(1, 2); }

  /// Checks fx, fy > 0, zero skew, a (0,0,0,1) bottom row and an
  /// orthonormal rotation block.
  void validate() const;

  static CameraModel make(double fx, double fy, double cx, double cy,
                          const Eigen::Matrix4d& extrinsics, std::size_t width,
                          std::size_t height);
  /// Camera at `eye` looking at `target`, image y axis aligned with -`up`.
  static CameraModel look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                             const Eigen::Vector3d& up, double focal, std::size_t width,
                             std::size_t height);
};

/// Metric BEV grid. Cell (i, j) has its centre at origin + (i, j) * cell_size.
struct BevSpec {
  std::size_t cells_x = 1;
  std::size_t cells_y = 1;
  double cell_size = 1.0;
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  std::vector<double> heights{0.0};

  void validate() const;
  double mid_height() const;
  /// Fractional cell coordinates of a metric point.
  Eigen::Vector2d to_cell(const Eigen::Vector2d& metric) const {
    return (metric - origin) / cell_size;
  }

  friend bool operator==(const BevSpec&, const BevSpec&) = default;
};

struct EgoPose {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;

  EgoPose() = default;
  EgoPose(double x_, double y_, double yaw_);
};

/// Wraps an angle into (-pi, pi].
double normalize_angle(double radians);

struct BevFeature {
  BevSpec spec;
  Tensor data;  // cells_x x cells_y x C

  BevFeature() = default;
  BevFeature(BevSpec spec_, Tensor data_);
  BevFeature(BevSpec spec_, std::size_t channels);

  std::size_t channels() const { return data.dim(2); }
  Eigen::Map<const Eigen::VectorXd> cell(std::size_t i, std::size_t j) const {
    return {data.data().data() + (i * spec.cells_y + j) * channels(),
            static_cast<Eigen::Index>(channels())};
  }
  Eigen::Map<Eigen::VectorXd> cell(std::size_t i, std::size_t j) {
    return {data.data().data() + (i * spec.cells_y + j) * channels(),
            static_cast<Eigen::Index>(channels())};
  }
};

/// Throws ShapeError unless both features share a spec and channel count.
void require_compatible(const BevFeature& a, const BevFeature& b, const char* what);

/// C x cells_y x cells_x image-layout view of a BEV feature: grid index i
/// becomes the image column and j the row.
Tensor to_channel_major(const BevFeature& feature);
BevFeature from_channel_major(const BevSpec& spec, const Tensor& chw);

Eigen::Vector3d bev_cell_to_world(const BevSpec& spec, std::size_t i, std::size_t j, double h);

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
  bool valid = false;
};

inline constexpr double kMinDepth = 1e-6;

/// Invalid projections still carry the computed (u, v, depth).
Projection project_point(const CameraModel& cam, const Eigen::Vector3d& p_world);

/// Homogeneous SE(2) transforms between an ego frame and the world frame.
Eigen::Matrix3d ego_to_world(const EgoPose& pose);
Eigen::Matrix3d world_to_ego(const EgoPose& pose);

/// Maps points expressed in the `from` ego frame into the `to` ego frame.
Eigen::Matrix3d ego_motion_matrix(const EgoPose& from, const EgoPose& to);

/// Planar SE(2) lifted to a 4x4 rigid transform (z unchanged).
Eigen::Matrix4d lift_se2(const Eigen::Matrix3d& m);

/// Inverse warp: each output cell centre is pulled back through M^-1 and
/// bilinearly sampled from the input with zero padding.
BevFeature warp_bev(const BevFeature& feature, const Eigen::Matrix3d& m);

/// Adjoint of warp_bev for a fixed M.
BevFeature warp_bev_backward(const BevFeature& grad_out, const Eigen::Matrix3d& m);

}  // namespace bevfuse
