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

#include "bevfuse/deform_attn.hpp"
#include "bevfuse/errors.hpp"
#include "bevfuse/fixtures.hpp"
#include "bevfuse/oracles.hpp"

namespace bevfuse {
namespace {

using fixtures::random_attention;
using fixtures::random_tensor;
using fixtures::random_vector;

TEST(DeformAttnParams, RandomStartsWithZeroOffsets) {
  Rng rng(1);
  const DeformAttnParams p = DeformAttnParams::random(8, 4, 4, rng);
  EXPECT_NO_THROW(p.validate());
  EXPECT_TRUE(p.offset_proj.weight.isZero(0.0));
  EXPECT_TRUE(p.offset_proj.bias.isZero(0.0));
  EXPECT_EQ(p.offset_proj.out_dim(), 32);
  EXPECT_EQ(p.weight_proj.out_dim(), 16);
  EXPECT_EQ(p.head_dim(), 2u);
}

TEST(DeformAttnParams, IndivisibleHeadsRejected) {
  Rng rng(2);
  EXPECT_THROW(DeformAttnParams::random(6, 4, 2, rng), ShapeError);
  DeformAttnParams p = DeformAttnParams::random(8, 2, 2, rng);
  p.weight_proj = LinearParams::zeros(8, 3);
  EXPECT_THROW(p.validate(), ShapeError);
}

TEST(DeformAttn, IdentityStyleSamplesReference) {
  Rng rng(3);
  for (const std::size_t heads : {1, 2, 4}) {
    const DeformAttnParams p = DeformAttnParams::identity(4, heads, 3);
    const Tensor v = random_tensor({4, 7, 9}, rng);
    const Eigen::Vector2d ref(0.37, 0.81);
    const Eigen::VectorXd out = deform_attn(random_vector(4, rng), ref, v, p);
    EXPECT_LE((out - bilinear_sample(v, 0.37 * 8, 0.81 * 6)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(DeformAttn, ZeroOutputProjection) {
  Rng rng(4);
  DeformAttnParams p = random_attention(4, 2, 2, rng);
  p.output_proj = LinearParams::zeros(4, 4);
  EXPECT_TRUE(deform_attn(random_vector(4, rng), {0.5, 0.5}, random_tensor({4, 5, 5}, rng), p).isZero(0.0));
}

TEST(DeformAttn, MatchesOracle) {
  Rng rng(5);
  for (int k = 0; k < 10; ++k) {
    const DeformAttnParams p = random_attention(4, 2, 4, rng);
    const Tensor v = random_tensor({4, 8, 8}, rng);
    const Eigen::VectorXd q = random_vector(4, rng);
    const Eigen::Vector2d ref(rng.uniform(0, 1), rng.uniform(0, 1));
    EXPECT_LE((deform_attn(q, ref, v, p) - oracle::deform_attn(q, ref, v, p)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(DeformAttn, ReferenceOutsideMapHitsPadding) {
  Rng rng(6);
  DeformAttnParams p = DeformAttnParams::identity(2, 1, 1);
  const Tensor v = random_tensor({2, 4, 4}, rng);
  EXPECT_TRUE(deform_attn(random_vector(2, rng), {5.0, 5.0}, v, p).isZero(0.0));
}

TEST(DeformAttn, ShapeErrors) {
  Rng rng(7);
  const DeformAttnParams p = random_attention(4, 2, 2, rng);
  EXPECT_THROW(deform_attn(random_vector(3, rng), {0.5, 0.5}, random_tensor({4, 4, 4}, rng), p), ShapeError);
  EXPECT_THROW(deform_attn(random_vector(4, rng), {0.5, 0.5}, random_tensor({3, 4, 4}, rng), p), ShapeError);
}

TEST(DeformAttn, ProjectedPathAgrees) {
  Rng rng(8);
  const DeformAttnParams p = random_attention(4, 2, 3, rng);
  const Tensor v = random_tensor({4, 6, 5}, rng);
  const Eigen::VectorXd q = random_vector(4, rng);
  EXPECT_EQ(deform_attn(q, {0.3, 0.6}, v, p),
            deform_attn_projected(q, {0.3, 0.6}, project_values(v, p.value_proj), p));
}

TEST(DeformAttnBackward, ZeroUpstream) {
  Rng rng(9);
  const DeformAttnParams p = random_attention(4, 2, 2, rng);
  const auto g = deform_attn_backward(random_vector(4, rng), {0.4, 0.4}, random_tensor({4, 8, 8}, rng), p,
                                      Eigen::VectorXd::Zero(4));
  EXPECT_TRUE(g.query.isZero(0.0));
  EXPECT_TRUE(g.value_map.flat().isZero(0.0));
  for (const LinearGrads* l : {&g.params.offset_proj, &g.params.weight_proj, &g.params.value_proj,
                               &g.params.output_proj}) {
    EXPECT_TRUE(l->weight.isZero(0.0));
    EXPECT_TRUE(l->bias.isZero(0.0));
  }
}

TEST(DeformAttnBackward, ConstantMapGivesNoOffsetGradient) {
  Rng rng(10);
  const DeformAttnParams p = DeformAttnParams::random(4, 2, 2, rng);
  const Tensor v({4, 8, 8}, 0.7);
  // Reference well inside so every sample has four in-map neighbours.
  const auto g = deform_attn_backward(random_vector(4, rng), {0.45, 0.55}, v, p, random_vector(4, rng));
  EXPECT_LE(g.params.offset_proj.weight.cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE(g.params.offset_proj.bias.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(DeformAttnBackward, QueryGradientMatchesFiniteDifferences) {
  Rng rng(11);
  const DeformAttnParams p = random_attention(4, 2, 4, rng, 1.5);
  const Tensor v = random_tensor({4, 8, 8}, rng);
  const Eigen::VectorXd up = random_vector(4, rng);
  const Eigen::Vector2d ref(0.4, 0.6);
  const auto f = [&](const Eigen::VectorXd& q) { return up.dot(deform_attn(q, ref, v, p)); };
  const auto g = [&](const Eigen::VectorXd& q) { return deform_attn_backward(q, ref, v, p, up).query; };
  EXPECT_LE(grad_check(f, g, random_vector(4, rng), 1e-5), 1e-4);
}

TEST(DeformAttnGrid, OneCellAndSequentialEquality) {
  Rng rng(12);
  const DeformAttnParams p = random_attention(4, 2, 2, rng);
  const Tensor v = random_tensor({4, 6, 6}, rng);
  const Tensor q1 = random_tensor({1, 1, 4}, rng);
  const Tensor r1({1, 1, 2}, std::vector<double>{0.2, 0.7});
  const Eigen::VectorXd single = deform_attn(q1.flat(), {0.2, 0.7}, v, p);
  EXPECT_EQ(Eigen::VectorXd(deform_attn_grid(q1, r1, v, p).flat()), single);

  const Tensor q = random_tensor({5, 7, 4}, rng);
  const Tensor r = random_tensor({5, 7, 2}, rng, 0.0, 1.0);
  const Tensor seq = deform_attn_grid(q, r, v, p, Execution::sequential);
  EXPECT_EQ(seq, deform_attn_grid(q, r, v, p, Execution::parallel));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 7; ++j) {
      const Eigen::VectorXd qc = Eigen::Map<const Eigen::VectorXd>(q.data().data() + (i * 7 + j) * 4, 4);
      const Eigen::VectorXd one = deform_attn(qc, {r(i, j, 0), r(i, j, 1)}, v, p);
      for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(one[static_cast<Eigen::Index>(c)], seq(i, j, c));
    }
}

TEST(DeformAttnGrid, BackwardSumsPerCellGradients) {
  Rng rng(13);
  const DeformAttnParams p = random_attention(4, 2, 2, rng);
  const Tensor v = random_tensor({4, 6, 6}, rng);
  const Tensor q = random_tensor({2, 3, 4}, rng);
  const Tensor r = random_tensor({2, 3, 2}, rng, 0.0, 1.0);
  const Tensor up = random_tensor({2, 3, 4}, rng);
  const auto g = deform_attn_grid_backward(q, r, v, p, up);
  Tensor value_sum({4, 6, 6});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const std::size_t at = (i * 3 + j) * 4;
      const Eigen::VectorXd qc = Eigen::Map<const Eigen::VectorXd>(q.data().data() + at, 4);
      const Eigen::VectorXd uc = Eigen::Map<const Eigen::VectorXd>(up.data().data() + at, 4);
      const auto one = deform_attn_backward(qc, {r(i, j, 0), r(i, j, 1)}, v, p, uc);
      value_sum.flat() += one.value_map.flat();
      const Eigen::VectorXd gq = Eigen::Map<const Eigen::VectorXd>(g.queries.data().data() + at, 4);
      EXPECT_LE((gq - one.query).cwiseAbs().maxCoeff(), 1e-12);
    }
  EXPECT_LE((value_sum.flat() - g.value_map.flat()).cwiseAbs().maxCoeff(), 1e-12);
}

}  // namespace
}  // namespace bevfuse
