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

#include <cstddef>
#include <vector>

#include "bevfuse/deform_attn.hpp"
#include "bevfuse/geometry.hpp"

namespace bevfuse {

/// Multi-view image features (each C x H x W) with their cameras, all
/// expressed relative to the current ego frame.
struct ImageFeatureSet {
  std::vector<Tensor> views;
  std::vector<CameraModel> cameras;

  std::size_t channels() const { return views.empty() ? 0 : views.front().dim(0); }
  void validate() const;
};

struct LgvtLayerParams {
  LinearParams query_reduce;  // 2C -> C, LiDAR block first
  DeformAttnParams attn;
};

struct LgvtParams {
  std::vector<LgvtLayerParams> layers;

  void validate(std::size_t channels) const;

  static LgvtParams random(std::size_t channels, std::size_t layers, std::size_t heads,
                           std::size_t points, Rng& rng);
  /// Random query reductions with identity-style attention (see
  /// DeformAttnParams::identity).
  static LgvtParams identity_attention(std::size_t channels, std::size_t layers,
                                       std::size_t heads, std::size_t points, Rng& rng);
};

/// Camera BEV initialisation. Every pillar point (i, j, h_n) is projected
/// into every view; each view contributes the channel-wise maximum of its
/// valid samples over heights, and the per-view maxima are averaged over the
/// views with at least one valid height. Cells seen by no view are zero.
BevFeature init_camera_bev(const BevSpec& spec, const ImageFeatureSet& images);

/// Per cell: reduce(concat(lidar, camera)). Returns X x Y x C.
Tensor guided_query(const BevFeature& b_lidar, const BevFeature& b_cam_prev,
                    const LinearParams& reduce);

/// One cross-attention update. Each cell attends, in every view that sees
/// its mid-pillar point, around that projection; outputs are averaged over
/// those views.
BevFeature lgvt_layer(const Tensor& q_guided, const ImageFeatureSet& images, const BevSpec& spec,
                      const DeformAttnParams& attn);

BevFeature lgvt_forward(const BevFeature& b_lidar, const ImageFeatureSet& images,
                        const BevSpec& spec, const LgvtParams& params);

}  // namespace bevfuse
