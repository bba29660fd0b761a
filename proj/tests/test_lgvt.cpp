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

#include <gtest/gtest.h>

#include "bevfuse/errors.hpp"
#include "bevfuse/fixtures.hpp"
#include "bevfuse/lgvt.hpp"
#include "bevfuse/synthetic.hpp"

namespace bevfuse {
namespace {

using fixtures::random_tensor;

// Looks straight down from 10 m with f = 20 px, so a ground cell (i, j) of a
// 0.5 m grid at the origin lands on pixel (i + cx, cy - j).
CameraModel top_down(double cx, double cy, std::size_t w, std::size_t h) {
  Eigen::Matrix4d ext = Eigen::Matrix4d::Identity();
  ext.topLeftCorner<3, 3>() = Eigen::Vector3d(1, -1, -1).asDiagonal();
  ext(2, 3) = 10.0;
  return CameraModel::make(20, 20, cx, cy, ext, w, h);
}

BevSpec ground_spec(std::size_t x, std::size_t y) {
  BevSpec s;
  s.cells_x = x;
  s.cells_y = y;
  s.cell_size = 0.5;
  s.heights = {0.0};
  return s;
}

TEST(InitCameraBev, ExactPixelIsCopied) {
  Rng rng(1);
  const BevSpec spec = ground_spec(6, 5);
  const ImageFeatureSet images{{random_tensor({3, 5, 6}, rng)}, {top_down(0, 4, 6, 5)}};
  const BevFeature b = init_camera_bev(spec, images);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(b.data(i, j, c), images.views[0](c, 4 - j, i));
}

TEST(InitCameraBev, UnseenCellsAreZero) {
  Rng rng(2);
  const BevSpec spec = ground_spec(6, 5);
  // Image only 3 pixels wide: columns i >= 3 fall outside.
  const ImageFeatureSet images{{random_tensor({2, 5, 3}, rng)}, {top_down(0, 4, 3, 5)}};
  const BevFeature b = init_camera_bev(spec, images);
  for (std::size_t i = 3; i < 6; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_TRUE(b.cell(i, j).isZero(0.0));
  // Behind the camera.
  CameraModel up = top_down(0, 4, 6, 5);
  up.extrinsics(2, 3) = -10.0;
  EXPECT_TRUE(init_camera_bev(spec, {{random_tensor({2, 5, 6}, rng)}, {up}}).data.flat().isZero(0.0));
}

TEST(InitCameraBev, MaxOverHeightsAverageOverViews) {
  Rng rng(3);
  BevSpec spec = ground_spec(4, 4);
  spec.heights = {0.0, 1.0, 2.0};
  const ImageFeatureSet images{{random_tensor({2, 8, 8}, rng), random_tensor({2, 8, 8}, rng)},
                               {top_down(2, 5, 8, 8), top_down(1, 6, 8, 8)}};
  const BevFeature b = init_camera_bev(spec, images);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(2);
      int hits = 0;
      for (std::size_t m = 0; m < 2; ++m) {
        Eigen::VectorXd best = Eigen::VectorXd::Constant(2, -INFINITY);
        bool any = false;
        for (const double h : spec.heights) {
          const Projection p = project_point(images.cameras[m], bev_cell_to_world(spec, i, j, h));
          if (!p.valid) continue;
          best = best.cwiseMax(bilinear_sample(images.views[m], p.u, p.v));
          any = true;
        }
        if (any) {
          sum += best;
          ++hits;
        }
      }
      const Eigen::VectorXd expect = hits ? Eigen::VectorXd(sum / hits) : Eigen::VectorXd::Zero(2);
      EXPECT_LE((b.cell(i, j) - expect).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(InitCameraBev, AddingACameraLeavesUnseenCellsAlone) {
  Rng rng(4);
  const BevSpec spec = ground_spec(8, 4);
  const Tensor left = random_tensor({2, 4, 4}, rng), right = random_tensor({2, 4, 4}, rng);
  const BevFeature one = init_camera_bev(spec, {{left}, {top_down(0, 3, 4, 4)}});
  const BevFeature two = init_camera_bev(spec, {{left, right}, {top_down(0, 3, 4, 4), top_down(-4, 3, 4, 4)}});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(one.cell(i, j), two.cell(i, j));
}

TEST(ImageFeatureSet, Validate) {
  Rng rng(5);
  EXPECT_THROW((ImageFeatureSet{{random_tensor({2, 4, 4}, rng)}, {}}.validate()), ShapeError);
  EXPECT_THROW((ImageFeatureSet{{random_tensor({2, 4, 4}, rng)}, {top_down(0, 0, 5, 4)}}.validate()),
               ShapeError);
}

TEST(GuidedQuery, BlockSelection) {
  Rng rng(6);
  const BevSpec spec = ground_spec(3, 4);
  const BevFeature lidar(spec, random_tensor({3, 4, 2}, rng));
  const BevFeature cam(spec, random_tensor({3, 4, 2}, rng));
  LinearParams first = LinearParams::zeros(4, 2), second = LinearParams::zeros(4, 2);
  first.weight.leftCols(2).setIdentity();
  second.weight.rightCols(2).setIdentity();
  EXPECT_EQ(guided_query(lidar, cam, first), lidar.data);
  EXPECT_EQ(guided_query(lidar, cam, second), cam.data);
}

TEST(GuidedQuery, MatchesPerCellLinear) {
  Rng rng(7);
  const BevSpec spec = ground_spec(3, 4);
  const BevFeature lidar(spec, random_tensor({3, 4, 2}, rng));
  const BevFeature cam(spec, random_tensor({3, 4, 2}, rng));
  const LinearParams reduce = LinearParams::random(4, 2, rng);
  const Tensor q = guided_query(lidar, cam, reduce);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      Eigen::VectorXd cat(4);
      cat << lidar.cell(i, j), cam.cell(i, j);
      const Eigen::VectorXd expect = linear_apply(reduce, cat);
      for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(q(i, j, c), expect[static_cast<Eigen::Index>(c)], 1e-12);
    }
  EXPECT_THROW(guided_query(lidar, BevFeature(ground_spec(4, 4), 2), reduce), ShapeError);
}

TEST(LgvtLayer, ZeroOutputProjection) {
  Rng rng(8);
  const BevSpec spec = ground_spec(6, 5);
  DeformAttnParams attn = fixtures::random_attention(2, 1, 2, rng);
  attn.output_proj = LinearParams::zeros(2, 2);
  const ImageFeatureSet images{{random_tensor({2, 5, 6}, rng)}, {top_down(0, 4, 6, 5)}};
  EXPECT_TRUE(lgvt_layer(random_tensor({6, 5, 2}, rng), images, spec, attn).data.flat().isZero(0.0));
}

TEST(LgvtLayer, IdentityAttentionSamplesProjection) {
  Rng rng(9);
  BevSpec spec = ground_spec(6, 5);
  spec.heights = {-0.5, 0.5};
  const CameraModel cam = top_down(0.3, 4.2, 7, 6);
  const ImageFeatureSet images{{random_tensor({4, 6, 7}, rng)}, {cam}};
  const BevFeature out =
      lgvt_layer(random_tensor({6, 5, 4}, rng), images, spec, DeformAttnParams::identity(4, 2, 4));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      const Projection p = project_point(cam, bev_cell_to_world(spec, i, j, spec.mid_height()));
      ASSERT_TRUE(p.valid);
      EXPECT_LE((out.cell(i, j) - bilinear_sample(images.views[0], p.u, p.v)).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(LgvtLayer, DisjointViewsUseTheSeeingView) {
  Rng rng(10);
  const BevSpec spec = ground_spec(8, 4);
  const ImageFeatureSet images{{random_tensor({2, 4, 4}, rng), random_tensor({2, 4, 4}, rng)},
                               {top_down(0, 3, 4, 4), top_down(-4, 3, 4, 4)}};
  const DeformAttnParams attn = fixtures::random_attention(2, 2, 2, rng, 0.5);
  const Tensor q = random_tensor({8, 4, 2}, rng);
  const BevFeature out = lgvt_layer(q, images, spec, attn);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const std::size_t m = i < 4 ? 0 : 1;
      const Projection p = project_point(images.cameras[m], bev_cell_to_world(spec, i, j, 0.0));
      ASSERT_TRUE(p.valid);
      const Eigen::VectorXd qc = Eigen::Map<const Eigen::VectorXd>(q.data().data() + (i * 4 + j) * 2, 2);
      const Eigen::VectorXd expect = deform_attn(qc, {p.u / 3.0, p.v / 3.0}, images.views[m], attn);
      EXPECT_LE((out.cell(i, j) - expect).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(LgvtForward, OneLayerIsComposition) {
  Rng rng(11);
  const BevSpec spec = ground_spec(6, 5);
  const ImageFeatureSet images{{random_tensor({2, 5, 6}, rng)}, {top_down(0, 4, 6, 5)}};
  const BevFeature lidar(spec, random_tensor({6, 5, 2}, rng));
  LgvtParams params = LgvtParams::random(2, 1, 2, 2, rng);
  params.layers[0].attn = fixtures::random_attention(2, 2, 2, rng);
  const BevFeature composed =
      lgvt_layer(guided_query(lidar, init_camera_bev(spec, images), params.layers[0].query_reduce), images,
                 spec, params.layers[0].attn);
  EXPECT_EQ(lgvt_forward(lidar, images, spec, params).data, composed.data);
}

TEST(LgvtForward, DeterministicAndShaped) {
  const BevSpec spec = default_spec(24);
  const Scene scene = beacon_scene(3, spec);
  const auto run = [&] {
    Rng rng(5);
    const LgvtParams params = LgvtParams::random(scene.channels, 3, 4, 4, rng);
    return lgvt_forward(render_lidar_bev(scene, 0), render_image_features(scene, 0), spec, params);
  };
  const BevFeature a = run(), b = run();
  EXPECT_EQ(a.data, b.data);
  EXPECT_EQ(a.data.shape(), (std::vector<std::size_t>{24, 24, scene.channels}));
  EXPECT_TRUE(a.data.all_finite());
}

TEST(LgvtParams, Validate) {
  Rng rng(12);
  LgvtParams p = LgvtParams::random(4, 2, 2, 2, rng);
  EXPECT_NO_THROW(p.validate(4));
  EXPECT_THROW(p.validate(6), ShapeError);
  p.layers.clear();
  EXPECT_THROW(p.validate(4), ShapeError);
}

TEST(InitCameraBev, BeaconLocalisationSmallSample) {
  const BevSpec spec = default_spec();
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Scene s = beacon_scene(seed, spec);
    const Cell a = peak_cell(init_camera_bev(spec, render_image_features(s, 0)));
    const Cell b = peak_cell(ground_truth_bev(s, 0));
    const auto d = [](std::size_t x, std::size_t y) { return x > y ? x - y : y - x; };
    hits += std::max(d(a.i, b.i), d(a.j, b.j)) <= 1 ? 1 : 0;
  }
  EXPECT_GE(hits, 9);
}

}  // namespace
}  // namespace bevfuse
