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

#include "bevfuse/lgvt.hpp"

#include "bevfuse/errors.hpp"
#include "sampling.hpp"

namespace bevfuse {

void ImageFeatureSet::validate() const {
  if (views.size() != cameras.size()) {
    throw ShapeError("image feature set: " + std::to_string(views.size()) + " views but " +
                     std::to_string(cameras.size()) + " cameras");
  }
  for (std::size_t m = 0; m < views.size(); ++m) {
    const Tensor& v = views[m];
    if (v.rank() != 3 || v.dim(0) != channels()) {
      throw ShapeError("image feature set: every view must be C x H x W with a shared C");
    }
    if (v.dim(1) != cameras[m].height || v.dim(2) != cameras[m].width) {
      throw ShapeError("image feature set: view " + std::to_string(m) +
                       " extents differ from its camera");
    }
  }
}

void LgvtParams::validate(std::size_t channels) const {
  if (layers.empty()) throw ShapeError("lgvt: at least one layer is required");
  const auto c = static_cast<Eigen::Index>(channels);
  for (const auto& layer : layers) {
    layer.query_reduce.validate();
    if (layer.query_reduce.in_dim() != 2 * c || layer.query_reduce.out_dim() != c) {
      throw ShapeError("lgvt: query_reduce must map 2C -> C");
    }
    layer.attn.validate();
    if (layer.attn.channels() != channels) throw ShapeError("lgvt: attention channel mismatch");
  }
}

LgvtParams LgvtParams::random(std::size_t channels, std::size_t layers, std::size_t heads,
                              std::size_t points, Rng& rng) {
  const auto c = static_cast<Eigen::Index>(channels);
  LgvtParams p;
  for (std::size_t l = 0; l < layers; ++l) {
    LgvtLayerParams layer;
    layer.query_reduce = LinearParams::random(2 * c, c, rng);
    layer.attn = DeformAttnParams::random(channels, heads, points, rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

LgvtParams LgvtParams::identity_attention(std::size_t channels, std::size_t layers,
                                          std::size_t heads, std::size_t points, Rng& rng) {
  const auto c = static_cast<Eigen::Index>(channels);
  LgvtParams p;
  for (std::size_t l = 0; l < layers; ++l) {
    p.layers.push_back({LinearParams::random(2 * c, c, rng),
                        DeformAttnParams::identity(channels, heads, points)});
  }
  return p;
}

BevFeature init_camera_bev(const BevSpec& spec, const ImageFeatureSet& images) {
  spec.validate();
  images.validate();
  const std::size_t c = images.channels();
  const auto ci = static_cast<Eigen::Index>(c);
  BevFeature out(spec, c);
  Eigen::VectorXd view_max(ci), sample(ci);
  for (std::size_t i = 0; i < spec.cells_x; ++i) {
    for (std::size_t j = 0; j < spec.cells_y; ++j) {
      auto cell = out.cell(i, j);
      std::size_t hits = 0;
      for (std::size_t m = 0; m < images.views.size(); ++m) {
        const Tensor& view = images.views[m];
        const auto plane = detail::PlaneView::chw(c, view.dim(1), view.dim(2));
        bool any = false;
        for (double h : spec.heights) {
          const Projection p = project_point(images.cameras[m], bev_cell_to_world(spec, i, j, h));
          if (!p.valid) continue;
          sample.setZero();
          detail::sample_into(view.data().data(), plane, 0, p.u, p.v, 1.0, sample);
          if (any) {
            view_max = view_max.cwiseMax(sample);
          } else {
            view_max = sample;
            any = true;
          }
        }
        if (any) {
          cell += view_max;
          ++hits;
        }
      }
      if (hits > 1) cell /= static_cast<double>(hits);
    }
  }
  return out;
}

Tensor guided_query(const BevFeature& b_lidar, const BevFeature& b_cam_prev,
                    const LinearParams& reduce) {
  require_compatible(b_lidar, b_cam_prev, "guided_query");
  reduce.validate();
  const std::size_t c = b_lidar.channels();
  const auto ci = static_cast<Eigen::Index>(c);
  if (reduce.in_dim() != 2 * ci || reduce.out_dim() != ci) {
    throw ShapeError("guided_query: reduction must map 2C -> C");
  }
  const BevSpec& spec = b_lidar.spec;
  Tensor out({spec.cells_x, spec.cells_y, c});
  // Splitting the weight into LiDAR and camera blocks is the concat.
  const auto w_lidar = reduce.weight.leftCols(ci);
  const auto w_cam = reduce.weight.rightCols(ci);
  for (std::size_t i = 0; i < spec.cells_x; ++i) {
    for (std::size_t j = 0; j < spec.cells_y; ++j) {
      Eigen::Map<Eigen::VectorXd>(out.data().data() + (i * spec.cells_y + j) * c, ci) =
          w_lidar * b_lidar.cell(i, j) + w_cam * b_cam_prev.cell(i, j) + reduce.bias;
    }
  }
  return out;
}

BevFeature lgvt_layer(const Tensor& q_guided, const ImageFeatureSet& images, const BevSpec& spec,
                      const DeformAttnParams& attn) {
  spec.validate();
  images.validate();
  attn.validate();
  const std::size_t c = attn.channels();
  if (q_guided.rank() != 3 || q_guided.dim(0) != spec.cells_x || q_guided.dim(1) != spec.cells_y ||
      q_guided.dim(2) != c) {
    throw ShapeError("lgvt_layer: guided query must be X x Y x C");
  }
  if (images.channels() != c) throw ShapeError("lgvt_layer: image channels differ from attention");
  const auto ci = static_cast<Eigen::Index>(c);

  std::vector<Tensor> projected;
  projected.reserve(images.views.size());
  for (const Tensor& view : images.views) projected.push_back(project_values(view, attn.value_proj));

  const double mid = spec.mid_height();
  BevFeature out(spec, c);
  for (std::size_t i = 0; i < spec.cells_x; ++i) {
    for (std::size_t j = 0; j < spec.cells_y; ++j) {
      const Eigen::Map<const Eigen::VectorXd> q(
          q_guided.data().data() + (i * spec.cells_y + j) * c, ci);
      const Eigen::Vector3d pillar = bev_cell_to_world(spec, i, j, mid);
      auto cell = out.cell(i, j);
      std::size_t hits = 0;
      for (std::size_t m = 0; m < images.views.size(); ++m) {
        const CameraModel& cam = images.cameras[m];
        const Projection p = project_point(cam, pillar);
        if (!p.valid) continue;
        const Eigen::Vector2d ref(cam.width > 1 ? p.u / static_cast<double>(cam.width - 1) : 0.0,
                                  cam.height > 1 ? p.v / static_cast<double>(cam.height - 1) : 0.0);
        cell += deform_attn_projected(q, ref, projected[m], attn);
        ++hits;
      }
      if (hits > 1) cell /= static_cast<double>(hits);
    }
  }
  return out;
}

BevFeature lgvt_forward(const BevFeature& b_lidar, const ImageFeatureSet& images,
                        const BevSpec& spec, const LgvtParams& params) {
  params.validate(b_lidar.channels());
  if (!(b_lidar.spec == spec)) throw ShapeError("lgvt_forward: LiDAR BEV spec differs");
  BevFeature b_cam = init_camera_bev(spec, images);
  for (const auto& layer : params.layers) {
    const Tensor q = guided_query(b_lidar, b_cam, layer.query_reduce);
    b_cam = lgvt_layer(q, images, spec, layer.attn);
  }
  return b_cam;
}

}  // namespace bevfuse
