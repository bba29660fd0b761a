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
#include "bevfuse/spatial_fusion.hpp"

namespace bevfuse {
namespace {

using fixtures::random_tensor;

BevSpec spec() {
  BevSpec s;
  s.cells_x = 7;
  s.cells_y = 5;
  return s;
}

TEST(FuseSpatial, LidarBlockDelta) {
  Rng rng(1);
  const BevFeature lidar(spec(), random_tensor({7, 5, 3}, rng));
  const BevFeature cam(spec(), random_tensor({7, 5, 3}, rng));
  EXPECT_EQ(fuse_spatial(lidar, cam, ConvParams::block_delta(6, 3, 0)).data, lidar.data);
}

TEST(FuseSpatial, ZeroCameraThroughCameraBlock) {
  Rng rng(2);
  const BevFeature lidar(spec(), random_tensor({7, 5, 3}, rng));
  const BevFeature cam(spec(), 3);
  EXPECT_TRUE(fuse_spatial(lidar, cam, ConvParams::block_delta(6, 3, 3)).data.flat().isZero(0.0));
}

TEST(FuseSpatial, MatchesConcatThenConv) {
  Rng rng(3);
  const BevFeature lidar(spec(), random_tensor({7, 5, 3}, rng));
  const BevFeature cam(spec(), random_tensor({7, 5, 3}, rng));
  const ConvParams conv = ConvParams::random(6, 3, rng);
  const Tensor expect = conv2d(concat_channels(to_channel_major(lidar), to_channel_major(cam)), conv);
  const Tensor got = to_channel_major(fuse_spatial(lidar, cam, conv));
  EXPECT_LE((got.flat() - expect.flat()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FuseSpatial, StackedConvolutions) {
  Rng rng(4);
  const BevFeature lidar(spec(), random_tensor({7, 5, 2}, rng));
  const BevFeature cam(spec(), random_tensor({7, 5, 2}, rng));
  const std::vector<ConvParams> convs{ConvParams::random(4, 2, rng), ConvParams::random(2, 2, rng)};
  const Tensor expect =
      conv2d(conv2d(concat_channels(to_channel_major(lidar), to_channel_major(cam)), convs[0]), convs[1]);
  const Tensor got = to_channel_major(fuse_spatial(lidar, cam, convs));
  EXPECT_LE((got.flat() - expect.flat()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FuseSpatial, Errors) {
  Rng rng(5);
  const BevFeature lidar(spec(), random_tensor({7, 5, 2}, rng));
  BevSpec other = spec();
  other.cell_size = 2.0;
  EXPECT_THROW(fuse_spatial(lidar, BevFeature(other, 2), ConvParams::block_delta(4, 2, 0)), ShapeError);
  EXPECT_THROW(fuse_spatial(lidar, BevFeature(spec(), 3), ConvParams::block_delta(4, 2, 0)), ShapeError);
  EXPECT_THROW(fuse_spatial(lidar, lidar, ConvParams::block_delta(3, 2, 0)), ShapeError);
  EXPECT_THROW(fuse_spatial(lidar, lidar, std::span<const ConvParams>()), ShapeError);
}

TEST(FuseSpatial, AveragingConv) {
  Rng rng(6);
  const BevFeature lidar(spec(), random_tensor({7, 5, 2}, rng));
  const BevFeature cam(spec(), random_tensor({7, 5, 2}, rng));
  const BevFeature f = fuse_spatial(lidar, cam, averaging_fusion_conv(2));
  EXPECT_LE((f.data.flat() - 0.5 * (lidar.data.flat() + cam.data.flat())).cwiseAbs().maxCoeff(), 1e-15);
}

}  // namespace
}  // namespace bevfuse
