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

// Deliberately naive reference implementations. They share no code with the
// library kernels (no strided views, no Eigen products, no cached value
// projections) and exist only to cross-check them.

#include <Eigen/Core>

#include "bevfuse/deform_attn.hpp"
#include "bevfuse/geometry.hpp"
#include "bevfuse/tensor.hpp"

namespace bevfuse::oracle {

/// Direct four-term interpolation formula over a C x H x W map.
Eigen::VectorXd bilinear(const Tensor& feature, double x, double y);

Eigen::VectorXd linear(const LinearParams& p, const Eigen::VectorXd& input);

/// Six nested loops, zero padding 1.
Tensor conv2d(const Tensor& input, const ConvParams& p);

/// Explicit per-head, per-point loop; values are projected per sampled
/// corner pixel.
Eigen::VectorXd deform_attn(const Eigen::VectorXd& query, const Eigen::Vector2d& ref,
                            const Tensor& value_map, const DeformAttnParams& p);

/// 4x4 extrinsic then 3x3 intrinsic product written out element by element.
Projection project(const CameraModel& cam, const Eigen::Vector3d& p_world);

/// Frame change through world coordinates with explicit trigonometry.
Eigen::Vector2d ego_change(const EgoPose& from, const EgoPose& to, const Eigen::Vector2d& p);

}  // namespace bevfuse::oracle
