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

#include "bevfuse/spatial_fusion.hpp"

#include "bevfuse/errors.hpp"

namespace bevfuse {

BevFeature fuse_spatial(const BevFeature& b_lidar, const BevFeature& b_camera,
                        std::span<const ConvParams> convs) {
  require_compatible(b_lidar, b_camera, "fuse_spatial");
  if (convs.empty()) throw ShapeError("fuse_spatial: at least one convolution is required");
  const std::size_t c = b_lidar.channels();
  if (convs.front().in_channels() != 2 * c) {
    throw ShapeError("fuse_spatial: first convolution must take 2C = " + std::to_string(2 * c) +
                     " channels");
  }
  Tensor x = concat_channels(to_channel_major(b_lidar), to_channel_major(b_camera));
  for (const ConvParams& conv : convs) x = conv2d(x, conv);
  return from_channel_major(b_lidar.spec, x);
}

ConvParams averaging_fusion_conv(std::size_t channels) {
  ConvParams conv = ConvParams::block_delta(2 * channels, channels, 0, 0.5);
  const ConvParams cam = ConvParams::block_delta(2 * channels, channels, channels, 0.5);
  for (std::size_t k = 0; k < conv.kernel.size(); ++k) conv.kernel[k] += cam.kernel[k];
  return conv;
}

}  // namespace bevfuse
