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

#include <span>

#include "bevfuse/geometry.hpp"

namespace bevfuse {

/// F = Conv(Concat(B_lidar, B_camera)), LiDAR channels first. With several
/// convolutions the first maps 2C -> C and the rest C -> C.
BevFeature fuse_spatial(const BevFeature& b_lidar, const BevFeature& b_camera,
                        std::span<const ConvParams> convs);

inline BevFeature fuse_spatial(const BevFeature& b_lidar, const BevFeature& b_camera,
                               const ConvParams& conv) {
  return fuse_spatial(b_lidar, b_camera, std::span<const ConvParams>(&conv, 1));
}

/// Equal-weight blend of the two modalities: 0.5 * (lidar + camera).
ConvParams averaging_fusion_conv(std::size_t channels);

}  // namespace bevfuse
