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

#include "bevfuse/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "bevfuse/errors.hpp"
#include "sampling.hpp"

namespace bevfuse {

void CameraModel::validate() const {
  if (!(fx() > 0.0) || !(fy() > 0.0)) throw ShapeError("camera: fx and fy must be positive");
  if (intrinsics(0, 1) != 0.0 || intrinsics(1, 0) != 0.0 || intrinsics(2, 0) != 0.0 ||
      intrinsics(2, 1) != 0.0 || intrinsics(2, 2) != 1.0) {
    throw ShapeError("camera: intrinsics must be [fx 0 cx; 0 fy cy; 0 0 1]");
  }
  if (extrinsics.row(3) != Eigen::RowVector4d(0, 0, 0, 1)) {
    throw ShapeError("camera: extrinsics bottom row must be (0, 0, 0, 1)");
  }
  const Eigen::Matrix3d r = extrinsics.topLeftCorner<3, 3>();
  if (!(r * r.transpose()).isApprox(Eigen::Matrix3d::Identity(), 1e-9) ||
      ((r * r.transpose()) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    throw ShapeError("camera: extrinsic rotation block is not orthonormal");
  }
  if (width == 0 || height == 0) throw ShapeError("camera: image extents must be positive");
}

CameraModel CameraModel::make(double fx, double fy, double cx, double cy,
                              const Eigen::Matrix4d& extrinsics, std::size_t width,
                              std::size_t height) {
  CameraModel cam;
  cam.intrinsics << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  cam.extrinsics = extrinsics;
  cam.width = width;
  cam.height = height;
  cam.validate();
  return cam;
}

CameraModel CameraModel::look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                                 const Eigen::Vector3d& up, double focal, std::size_t width,
                                 std::size_t height) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  const Eigen::Vector3d right = forward.cross(up).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix4d ext = Eigen::Matrix4d::Identity();
  ext.block<1, 3>(0, 0) = right.transpose();
  ext.block<1, 3>(1, 0) = down.transpose();
  ext.block<1, 3>(2, 0) = forward.transpose();
  ext.block<3, 1>(0, 3) = -ext.topLeftCorner<3, 3>() * eye;
  return make(focal, focal, 0.5 * static_cast<double>(width - 1),
              0.5 * static_cast<double>(height - 1), ext, width, height);
}

void BevSpec::validate() const {
  if (cells_x == 0 || cells_y == 0) throw ShapeError("bev spec: grid extents must be positive");
  if (!(cell_size > 0.0)) throw ShapeError("bev spec: cell_size must be positive");
  if (heights.empty()) throw ShapeError("bev spec: at least one pillar height is required");
  for (std::size_t n = 1; n < heights.size(); ++n) {
    if (!(heights[n] > heights[n - 1])) {
      throw ShapeError("bev spec: pillar heights must be strictly increasing");
    }
  }
}

double BevSpec::mid_height() const {
  double sum = 0.0;
  for (double h : heights) sum += h;
  return sum / static_cast<double>(heights.size());
}

double normalize_angle(double radians) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double a = std::fmod(radians, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  if (a > std::numbers::pi) a -= kTwoPi;
  return a;
}

EgoPose::EgoPose(double x_, double y_, double yaw_) : x(x_), y(y_), yaw(normalize_angle(yaw_)) {}

BevFeature::BevFeature(BevSpec spec_, Tensor data_) : spec(std::move(spec_)), data(std::move(data_)) {
  if (data.rank() != 3 || data.dim(0) != spec.cells_x || data.dim(1) != spec.cells_y) {
    throw ShapeError("bev feature: tensor extents do not match the grid spec");
  }
}

BevFeature::BevFeature(BevSpec spec_, std::size_t channels)
    : spec(std::move(spec_)), data({spec.cells_x, spec.cells_y, channels}) {}

void require_compatible(const BevFeature& a, const BevFeature& b, const char* what) {
  if (!(a.spec == b.spec)) throw ShapeError(std::string(what) + ": BEV specs differ");
  if (a.channels() != b.channels()) {
    throw ShapeError(std::string(what) + ": channel counts differ (" +
                     std::to_string(a.channels()) + " vs " + std::to_string(b.channels()) + ")");
  }
}

Tensor to_channel_major(const BevFeature& feature) {
  const std::size_t nx = feature.spec.cells_x, ny = feature.spec.cells_y, c = feature.channels();
  Tensor out({c, ny, nx});
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t k = 0; k < c; ++k) out(k, j, i) = feature.data(i, j, k);
  return out;
}

BevFeature from_channel_major(const BevSpec& spec, const Tensor& chw) {
  if (chw.rank() != 3 || chw.dim(1) != spec.cells_y || chw.dim(2) != spec.cells_x) {
    throw ShapeError("from_channel_major: tensor does not match the grid spec");
  }
  BevFeature out(spec, chw.dim(0));
  for (std::size_t i = 0; i < spec.cells_x; ++i)
    for (std::size_t j = 0; j < spec.cells_y; ++j)
      for (std::size_t k = 0; k < chw.dim(0); ++k) out.data(i, j, k) = chw(k, j, i);
  return out;
}

Eigen::Vector3d bev_cell_to_world(const BevSpec& spec, std::size_t i, std::size_t j, double h) {
  if (i >= spec.cells_x || j >= spec.cells_y) {
    throw std::out_of_range("bev_cell_to_world: cell (" + std::to_string(i) + ", " +
                            std::to_string(j) + ") outside the grid");
  }
  return {spec.origin.x() + static_cast<double>(i) * spec.cell_size,
          spec.origin.y() + static_cast<double>(j) * spec.cell_size, h};
}

Projection project_point(const CameraModel& cam, const Eigen::Vector3d& p_world) {
  const Eigen::Vector3d p_cam = (cam.extrinsics * p_world.homogeneous()).head<3>();
  const Eigen::Vector3d uvw = cam.intrinsics * p_cam;
  Projection p;
  p.depth = p_cam.z();
  p.u = uvw.x() / uvw.z();
  p.v = uvw.y() / uvw.z();
  p.valid = p.depth > kMinDepth && p.u >= 0.0 && p.v >= 0.0 &&
            p.u <= static_cast<double>(cam.width - 1) &&
            p.v <= static_cast<double>(cam.height - 1);
  return p;
}

Eigen::Matrix3d ego_to_world(const EgoPose& pose) {
  const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
  Eigen::Matrix3d m;
  m << c, -s, pose.x, s, c, pose.y, 0.0, 0.0, 1.0;
  return m;
}

Eigen::Matrix3d world_to_ego(const EgoPose& pose) {
  const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
  Eigen::Matrix3d m;
  m << c, s, -(c * pose.x + s * pose.y), -s, c, s * pose.x - c * pose.y, 0.0, 0.0, 1.0;
  return m;
}

Eigen::Matrix3d ego_motion_matrix(const EgoPose& from, const EgoPose& to) {
  // Compose as a single rotation by (from.yaw - to.yaw) so that equal poses
  // give an exact identity.
  const double dyaw = from.yaw - to.yaw;
  const double c = std::cos(dyaw), s = std::sin(dyaw);
  const double ct = std::cos(to.yaw), st = std::sin(to.yaw);
  const double dx = from.x - to.x, dy = from.y - to.y;
  Eigen::Matrix3d m;
  m << c, -s, ct * dx + st * dy, s, c, -st * dx + ct * dy, 0.0, 0.0, 1.0;
  return m;
}

Eigen::Matrix4d lift_se2(const Eigen::Matrix3d& m) {
  Eigen::Matrix4d out = Eigen::Matrix4d::Identity();
  out.topLeftCorner<2, 2>() = m.topLeftCorner<2, 2>();
  out.block<2, 1>(0, 3) = m.block<2, 1>(0, 2);
  return out;
}

namespace {

// Affine map from output cell index to fractional source cell index,
// src = R * (i, j) + shift, with (R, t) = M^-1 and
// shift = (R * origin + t - origin) / cell_size.
struct CellMap {
  Eigen::Matrix2d rotation;
  Eigen::Vector2d shift;

  CellMap(const BevSpec& spec, const Eigen::Matrix3d& m) {
    const Eigen::Matrix2d r = m.topLeftCorner<2, 2>();
    if (std::abs(r.determinant()) < 1e-12) throw ShapeError("warp_bev: singular transform");
    rotation = r.inverse();
    const Eigen::Vector2d t = -rotation * m.block<2, 1>(0, 2);
    shift = (rotation * spec.origin + t - spec.origin) / spec.cell_size;
  }

  Eigen::Vector2d operator()(std::size_t i, std::size_t j) const {
    const double fi = static_cast<double>(i), fj = static_cast<double>(j);
    return {rotation(0, 0) * fi + rotation(0, 1) * fj + shift.x(),
            rotation(1, 0) * fi + rotation(1, 1) * fj + shift.y()};
  }
};

}  // namespace

BevFeature warp_bev(const BevFeature& feature, const Eigen::Matrix3d& m) {
  const BevSpec& spec = feature.spec;
  const CellMap map(spec, m);
  const std::size_t c = feature.channels();
  const auto view = detail::PlaneView::bev(spec.cells_x, spec.cells_y, c);
  BevFeature out(spec, c);
  for (std::size_t i = 0; i < spec.cells_x; ++i) {
    for (std::size_t j = 0; j < spec.cells_y; ++j) {
      const Eigen::Vector2d src = map(i, j);
      detail::sample_into(feature.data.data().data(), view, 0, src.x(), src.y(), 1.0,
                          out.cell(i, j));
    }
  }
  return out;
}

BevFeature warp_bev_backward(const BevFeature& grad_out, const Eigen::Matrix3d& m) {
  const BevSpec& spec = grad_out.spec;
  const CellMap map(spec, m);
  const std::size_t c = grad_out.channels();
  const auto view = detail::PlaneView::bev(spec.cells_x, spec.cells_y, c);
  BevFeature grad_in(spec, c);
  for (std::size_t i = 0; i < spec.cells_x; ++i) {
    for (std::size_t j = 0; j < spec.cells_y; ++j) {
      const Eigen::Vector2d src = map(i, j);
      detail::scatter_into(view, 0, src.x(), src.y(), grad_out.cell(i, j),
                           grad_in.data.data().data());
    }
  }
  return grad_in;
}

}  // namespace bevfuse
