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

#include "bevfuse/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bevfuse/errors.hpp"
#include "bevfuse/rng.hpp"

namespace bevfuse {
namespace {

// Points exactly on a footprint edge are outside.
constexpr double kEdgeTolerance = 1e-9;

Eigen::Vector3d to_ego(const Eigen::Vector3d& world, const EgoPose& pose) {
  const Eigen::Vector3d planar = world_to_ego(pose) * Eigen::Vector3d(world.x(), world.y(), 1.0);
  return {planar.x(), planar.y(), world.z()};
}

void check_frame(const Scene& scene, std::size_t t) {
  if (t >= scene.frames()) {
    throw std::out_of_range("frame " + std::to_string(t) + " outside a " +
                            std::to_string(scene.frames()) + "-frame scene");
  }
}

Eigen::VectorXd random_signature(Rng& rng, std::size_t channels) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(channels));
  s[0] = 1.0;
  for (Eigen::Index k = 1; k < s.size(); ++k) s[k] = rng.uniform(0.0, 0.5);
  return s;
}

Scene base_scene(std::uint64_t seed, const BevSpec& spec) {
  Scene s;
  s.seed = seed;
  s.spec = spec;
  s.image_height = 64;
  s.image_width = 64;
  s.rig = default_rig(spec, s.image_height, s.image_width);
  return s;
}

}  // namespace

void Scene::validate() const {
  spec.validate();
  if (ego.empty()) throw ShapeError("scene: at least one ego pose is required");
  if (channels == 0) throw ShapeError("scene: channel count must be positive");
  for (const auto& cam : rig) {
    cam.validate();
    if (cam.width != image_width || cam.height != image_height) {
      throw ShapeError("scene: camera extents differ from image_size");
    }
  }
  for (const auto& b : boxes) {
    if (!(b.half_extent.x() > 0.0) || !(b.half_extent.y() > 0.0)) {
      throw ShapeError("scene: box half extents must be positive");
    }
    if (static_cast<std::size_t>(b.signature.size()) != channels || !b.signature.allFinite()) {
      throw ShapeError("scene: box signatures must be finite with one entry per channel");
    }
  }
}

BevFeature render_lidar_bev(const Scene& scene, std::size_t t) {
  check_frame(scene, t);
  const BevSpec& spec = scene.spec;
  BevFeature out(spec, scene.channels);
  std::vector<char> covered(spec.cells_x * spec.cells_y, 0);
  for (const Box& box : scene.boxes) {
    const Eigen::Vector3d c = to_ego(box.center_at(t), scene.ego[t]);
    const Eigen::Vector2d lo = spec.to_cell(c.head<2>() - box.half_extent);
    const Eigen::Vector2d hi = spec.to_cell(c.head<2>() + box.half_extent);
    const auto i0 = static_cast<long>(std::max(0.0, std::floor(lo.x())));
    const auto j0 = static_cast<long>(std::max(0.0, std::floor(lo.y())));
    const auto i1 = std::min<long>(static_cast<long>(spec.cells_x) - 1,
                                   static_cast<long>(std::ceil(hi.x())));
    const auto j1 = std::min<long>(static_cast<long>(spec.cells_y) - 1,
                                   static_cast<long>(std::ceil(hi.y())));
    for (long i = i0; i <= i1; ++i) {
      for (long j = j0; j <= j1; ++j) {
        const Eigen::Vector3d p = bev_cell_to_world(spec, static_cast<std::size_t>(i),
                                                    static_cast<std::size_t>(j), 0.0);
        const Eigen::Vector2d d = (p.head<2>() - c.head<2>()).cwiseAbs();
        if (d.x() >= box.half_extent.x() - kEdgeTolerance ||
            d.y() >= box.half_extent.y() - kEdgeTolerance) {
          continue;
        }
        auto cell = out.cell(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        char& seen = covered[static_cast<std::size_t>(i) * spec.cells_y + static_cast<std::size_t>(j)];
        cell = seen ? Eigen::VectorXd(cell.cwiseMax(box.signature)) : box.signature;
        seen = 1;
      }
    }
  }
  return out;
}

ImageFeatureSet render_image_features(const Scene& scene, std::size_t t) {
  check_frame(scene, t);
  const long radius = static_cast<long>(std::floor(3.0 * kImageSigma));
  const double cutoff2 = 9.0 * kImageSigma * kImageSigma;
  const double inv2s2 = 1.0 / (2.0 * kImageSigma * kImageSigma);
  ImageFeatureSet set;
  set.cameras = scene.rig;
  for (const CameraModel& cam : scene.rig) {
    Tensor view({scene.channels, cam.height, cam.width});
    for (const Box& box : scene.boxes) {
      const Projection p = project_point(cam, to_ego(box.center_at(t), scene.ego[t]));
      if (!p.valid) continue;
      const auto u0 = static_cast<long>(std::lround(p.u));
      const auto v0 = static_cast<long>(std::lround(p.v));
      for (long v = std::max(0L, v0 - radius - 1);
           v <= std::min<long>(static_cast<long>(cam.height) - 1, v0 + radius + 1); ++v) {
        for (long u = std::max(0L, u0 - radius - 1);
             u <= std::min<long>(static_cast<long>(cam.width) - 1, u0 + radius + 1); ++u) {
          const double du = static_cast<double>(u) - p.u;
          const double dv = static_cast<double>(v) - p.v;
          const double r2 = du * du + dv * dv;
          if (r2 > cutoff2) continue;
          const double g = std::exp(-r2 * inv2s2);
          for (std::size_t k = 0; k < scene.channels; ++k) {
            view(k, static_cast<std::size_t>(v), static_cast<std::size_t>(u)) +=
                g * box.signature[static_cast<Eigen::Index>(k)];
          }
        }
      }
    }
    set.views.push_back(std::move(view));
  }
  return set;
}

BevFeature ground_truth_bev(const Scene& scene, std::size_t t) { return render_lidar_bev(scene, t); }

Cell peak_cell(const BevFeature& feature) {
  Cell best;
  double best_value = -1.0;
  for (std::size_t i = 0; i < feature.spec.cells_x; ++i) {
    for (std::size_t j = 0; j < feature.spec.cells_y; ++j) {
      const double v = std::abs(feature.data(i, j, 0));
      if (v > best_value) {
        best_value = v;
        best = {i, j};
      }
    }
  }
  return best;
}

double peak_displacement_error(const BevFeature& feature, const BevFeature& truth) {
  if (!(feature.spec == truth.spec)) throw ShapeError("peak_displacement_error: specs differ");
  if (truth.data.flat().isZero(0.0)) {
    throw std::domain_error("peak_displacement_error: ground truth is identically zero");
  }
  const Cell a = peak_cell(feature);
  const Cell b = peak_cell(truth);
  const double di = static_cast<double>(a.i) - static_cast<double>(b.i);
  const double dj = static_cast<double>(a.j) - static_cast<double>(b.j);
  return std::hypot(di, dj);
}

BevSpec default_spec(std::size_t cells, double cell_size, std::vector<double> heights) {
  BevSpec spec;
  spec.cells_x = cells;
  spec.cells_y = cells;
  spec.cell_size = cell_size;
  const double half = 0.5 * static_cast<double>(cells - 1) * cell_size;
  spec.origin = {-half, -half};
  spec.heights = std::move(heights);
  spec.validate();
  return spec;
}

std::vector<CameraModel> default_rig(const BevSpec& spec, std::size_t image_height,
                                     std::size_t image_width, std::size_t cameras) {
  // Each camera sits outside the grid at 45 degrees of elevation and looks at
  // the grid centre; the focal length keeps the whole grid inside the image.
  const Eigen::Vector2d centre =
      spec.origin + 0.5 * spec.cell_size *
                        Eigen::Vector2d(static_cast<double>(spec.cells_x - 1),
                                        static_cast<double>(spec.cells_y - 1));
  const double extent = spec.cell_size * static_cast<double>(std::max(spec.cells_x, spec.cells_y));
  const double distance = 1.5 * extent;
  const double elevation = std::numbers::pi / 4.0;
  const Eigen::Vector3d target(centre.x(), centre.y(), spec.mid_height());
  std::vector<CameraModel> rig;
  for (std::size_t k = 0; k < cameras; ++k) {
    const double azimuth = std::numbers::pi / 4.0 +
                           2.0 * std::numbers::pi * static_cast<double>(k) /
                               static_cast<double>(cameras == 2 ? 4 : cameras);
    const Eigen::Vector3d eye =
        target + distance * Eigen::Vector3d(std::cos(elevation) * std::cos(azimuth),
                                            std::cos(elevation) * std::sin(azimuth),
                                            std::sin(elevation));
    // Half-diagonal of the grid seen from `distance` must fit in half the image.
    const double half_angle = std::atan2(0.75 * extent, distance);
    const double focal =
        0.5 * static_cast<double>(std::min(image_width, image_height) - 1) / std::tan(half_angle);
    rig.push_back(CameraModel::look_at(eye, target, Eigen::Vector3d::UnitZ(), focal, image_width,
                                       image_height));
  }
  return rig;
}

Scene beacon_scene(std::uint64_t seed, const BevSpec& spec) {
  Rng rng(seed);
  Scene s = base_scene(seed, spec);
  s.ego = {EgoPose()};
  const auto margin = std::min<std::int64_t>(4, static_cast<std::int64_t>(spec.cells_x) / 4);
  const auto i = rng.uniform_int(margin, static_cast<std::int64_t>(spec.cells_x) - 1 - margin);
  const auto j = rng.uniform_int(margin, static_cast<std::int64_t>(spec.cells_y) - 1 - margin);
  Box b;
  const Eigen::Vector3d cell = bev_cell_to_world(spec, static_cast<std::size_t>(i),
                                                 static_cast<std::size_t>(j), 0.0);
  b.center = {cell.x() + rng.uniform(-0.25, 0.25) * spec.cell_size,
              cell.y() + rng.uniform(-0.25, 0.25) * spec.cell_size,
              rng.uniform(spec.heights.front(), spec.heights.back())};
  b.half_extent = Eigen::Vector2d::Constant(0.5 * spec.cell_size);
  b.signature = random_signature(rng, s.channels);
  s.boxes.push_back(std::move(b));
  return s;
}

Scene static_scene(std::uint64_t seed, const BevSpec& spec, std::size_t frames,
                   double max_step_cells) {
  Rng rng(seed);
  Scene s = base_scene(seed, spec);
  // Per-step translation plus the rotation's sweep over the box keeps each
  // step within max_step_cells.
  double x = 0.0, y = 0.0, yaw = 0.0;
  const double step = 0.6 * max_step_cells * spec.cell_size;
  for (std::size_t t = 0; t < frames; ++t) {
    s.ego.emplace_back(x, y, yaw);
    const double heading = yaw + rng.uniform(-0.5, 0.5);
    const double dist = rng.uniform(0.0, step);
    x += dist * std::cos(heading);
    y += dist * std::sin(heading);
    yaw += rng.uniform(-0.05, 0.05);
  }
  // One-cell box centred on a frame-0 cell, so every frame's ground truth
  // has a single peak cell rather than a plateau.
  const Eigen::Vector2d target(rng.uniform(-4.0, 4.0) * spec.cell_size + 0.5 * x,
                               rng.uniform(-4.0, 4.0) * spec.cell_size + 0.5 * y);
  const Eigen::Vector2d cell = spec.to_cell(target).array().round();
  Box b;
  b.center = bev_cell_to_world(spec, static_cast<std::size_t>(cell.x()),
                               static_cast<std::size_t>(cell.y()), spec.mid_height());
  b.half_extent = Eigen::Vector2d::Constant(0.5 * spec.cell_size);
  b.signature = random_signature(rng, s.channels);
  s.boxes.push_back(std::move(b));
  return s;
}

Scene moving_blob_scene(std::uint64_t seed, const BevSpec& spec, double speed_cells,
                        std::size_t frames) {
  Rng rng(seed);
  Scene s = base_scene(seed, spec);
  const double ego_speed = rng.uniform(0.0, 1.0) * spec.cell_size;
  for (std::size_t t = 0; t < frames; ++t) {
    s.ego.emplace_back(ego_speed * static_cast<double>(t), 0.0, 0.0);
  }
  const double last = static_cast<double>(frames - 1);
  Box b;
  const Eigen::Vector2d end(ego_speed * last + rng.uniform(-2.0, 2.0) * spec.cell_size,
                            rng.uniform(-4.0, 4.0) * spec.cell_size);
  b.velocity = {speed_cells * spec.cell_size, 0.0};
  b.center = {end.x() - last * b.velocity.x(), end.y(), spec.mid_height()};
  b.half_extent = Eigen::Vector2d::Constant(1.5 * spec.cell_size);
  b.signature = random_signature(rng, s.channels);
  s.boxes.push_back(std::move(b));
  return s;
}

TrainingSample training_sample(const Scene& scene) {
  TrainingSample sample;
  for (std::size_t t = 0; t < scene.frames(); ++t) {
    sample.sequence.frames.push_back(render_lidar_bev(scene, t));
    sample.sequence.poses.push_back(scene.ego[t]);
  }
  sample.target = ground_truth_bev(scene, scene.frames() - 1);
  return sample;
}

std::vector<TrainingSample> moving_blob_family(std::uint64_t seed, std::size_t count,
                                               const BevSpec& spec, double speed_cells,
                                               std::size_t frames) {
  std::vector<TrainingSample> family;
  family.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    family.push_back(training_sample(moving_blob_scene(seed * 1000 + k, spec, speed_cells, frames)));
  }
  return family;
}

std::size_t support_extent_x(const BevFeature& feature, double threshold) {
  long first = -1, last = -1;
  for (std::size_t i = 0; i < feature.spec.cells_x; ++i) {
    for (std::size_t j = 0; j < feature.spec.cells_y; ++j) {
      if (std::abs(feature.data(i, j, 0)) > threshold) {
        if (first < 0) first = static_cast<long>(i);
        last = static_cast<long>(i);
        break;
      }
    }
  }
  return first < 0 ? 0 : static_cast<std::size_t>(last - first + 1);
}

}  // namespace bevfuse
