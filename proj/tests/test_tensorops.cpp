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

#include <cmath>

#include "bevfuse/errors.hpp"
#include "bevfuse/fixtures.hpp"
#include "bevfuse/oracles.hpp"
#include "bevfuse/tensor.hpp"

namespace bevfuse {
namespace {

using fixtures::random_tensor;
using fixtures::random_vector;

TEST(Tensor, ShapeAndData) {
  Tensor t({2, 3, 4}, 1.5);
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.rank(), 3u);
  EXPECT_EQ(t(1, 2, 3), 1.5);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>(3)), ShapeError);
}

TEST(Tensor, AllFinite) {
  Tensor t({2, 2});
  EXPECT_TRUE(t.all_finite());
  t[3] = NAN;
  EXPECT_FALSE(t.all_finite());
}

TEST(BilinearSample, GridNodeReturnsValue) {
  Tensor f({1, 4, 5});
  f(0, 2, 3) = 0.7;
  EXPECT_EQ(bilinear_sample(f, 3.0, 2.0)[0], 0.7);
}

TEST(BilinearSample, MidpointIsCornerMean) {
  Tensor f({1, 2, 2}, std::vector<double>{0, 1, 2, 3});
  EXPECT_DOUBLE_EQ(bilinear_sample(f, 0.5, 0.5)[0], 1.5);
}

TEST(BilinearSample, OutsideIsZero) {
  Rng rng(1);
  const Tensor f = random_tensor({3, 4, 4}, rng);
  EXPECT_TRUE(bilinear_sample(f, 4 + 10.0, 1.0).isZero(0.0));
  EXPECT_TRUE(bilinear_sample(f, 1.0, -1.5).isZero(0.0));
}

TEST(BilinearSample, PartialOverlapUsesZeroPadding) {
  Tensor f({1, 2, 2}, 1.0);
  EXPECT_DOUBLE_EQ(bilinear_sample(f, 1.5, 0.0)[0], 0.5);
  EXPECT_DOUBLE_EQ(bilinear_sample(f, -0.25, -0.25)[0], 0.75 * 0.75);
}

TEST(BilinearSample, MatchesOracle) {
  Rng rng(2);
  for (int k = 0; k < 20; ++k) {
    const Tensor f = random_tensor({1, 4, 4}, rng);
    const double x = rng.uniform(0, 3), y = rng.uniform(0, 3);
    EXPECT_LE((bilinear_sample(f, x, y) - oracle::bilinear(f, x, y)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(BilinearSample, RankMismatchThrows) {
  EXPECT_THROW(bilinear_sample(Tensor({2, 2}), 0.0, 0.0), ShapeError);
}

TEST(BilinearSampleBackward, ZeroUpstreamGivesZero) {
  Rng rng(3);
  const Tensor f = random_tensor({2, 5, 5}, rng);
  const auto g = bilinear_sample_backward(f, 1.3, 2.7, Eigen::VectorXd::Zero(2));
  EXPECT_TRUE(g.feature.flat().isZero(0.0));
  EXPECT_EQ(g.x, 0.0);
  EXPECT_EQ(g.y, 0.0);
}

TEST(BilinearSampleBackward, ConstantMapHasNoCoordinateGradient) {
  const Tensor f({2, 5, 5}, 3.0);
  const auto g = bilinear_sample_backward(f, 1.3, 2.7, Eigen::VectorXd::Ones(2));
  EXPECT_NEAR(g.x, 0.0, 1e-15);
  EXPECT_NEAR(g.y, 0.0, 1e-15);
}

TEST(BilinearSampleBackward, MatchesFiniteDifferences) {
  Rng rng(4);
  for (int k = 0; k < 10; ++k) {
    const Tensor f = random_tensor({2, 5, 6}, rng);
    const Eigen::VectorXd up = random_vector(2, rng);
    const double x = fixtures::interior_coordinate(rng, 6), y = fixtures::interior_coordinate(rng, 5);
    const auto g = bilinear_sample_backward(f, x, y, up);
    const double h = 1e-6;
    const double dx = (up.dot(bilinear_sample(f, x + h, y)) - up.dot(bilinear_sample(f, x - h, y))) / (2 * h);
    const double dy = (up.dot(bilinear_sample(f, x, y + h)) - up.dot(bilinear_sample(f, x, y - h))) / (2 * h);
    EXPECT_LE(std::abs(g.x - dx) / std::max(1.0, std::abs(dx)), 1e-5);
    EXPECT_LE(std::abs(g.y - dy) / std::max(1.0, std::abs(dy)), 1e-5);
    for (std::size_t idx = 0; idx < f.size(); ++idx) {
      Tensor fp = f, fm = f;
      fp[idx] += h;
      fm[idx] -= h;
      const double d = (up.dot(bilinear_sample(fp, x, y)) - up.dot(bilinear_sample(fm, x, y))) / (2 * h);
      EXPECT_LE(std::abs(g.feature[idx] - d), 1e-5);
    }
  }
}

TEST(BilinearSampleBackward, IntegerCoordinateUsesForwardCell) {
  Tensor f({1, 1, 3}, std::vector<double>{0.0, 1.0, 5.0});
  const auto g = bilinear_sample_backward(f, 1.0, 0.0, Eigen::VectorXd::Ones(1));
  EXPECT_DOUBLE_EQ(g.x, 4.0);
}

TEST(LinearApply, IdentityAndBias) {
  const Eigen::Vector3d x(1, -2, 3);
  EXPECT_EQ(linear_apply(LinearParams::identity(3), x), Eigen::VectorXd(x));
  LinearParams p = LinearParams::zeros(3, 2);
  p.bias << 4, 5;
  EXPECT_EQ(linear_apply(p, x), p.bias);
}

TEST(LinearApply, MatchesOracle) {
  Rng rng(5);
  const LinearParams p = LinearParams::random(3, 2, rng);
  const Eigen::VectorXd x = random_vector(3, rng);
  EXPECT_LE((linear_apply(p, x) - oracle::linear(p, x)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LinearApply, ShapeMismatchThrows) {
  EXPECT_THROW(linear_apply(LinearParams::identity(3), Eigen::VectorXd::Zero(2)), ShapeError);
}

TEST(LinearParams, RandomWithinFanInBound) {
  Rng rng(6);
  const LinearParams p = LinearParams::random(16, 5, rng);
  EXPECT_LE(p.weight.cwiseAbs().maxCoeff(), 0.25);
  EXPECT_LE(p.bias.cwiseAbs().maxCoeff(), 0.25);
}

TEST(Softmax, Examples) {
  const Eigen::VectorXd eq = softmax(Eigen::VectorXd::Constant(4, 2.0));
  for (Eigen::Index k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(eq[k], 0.25);
  const Eigen::VectorXd s = softmax(Eigen::Vector2d(0.0, std::log(3.0)));
  EXPECT_NEAR(s[0], 0.25, 1e-15);
  EXPECT_NEAR(s[1], 0.75, 1e-15);
}

TEST(Softmax, ShiftInvariantAndStable) {
  Rng rng(7);
  const Eigen::VectorXd x = random_vector(6, rng, -5, 5);
  const Eigen::VectorXd shifted = (x.array() + 123.0).matrix();
  EXPECT_LE((softmax(x) - softmax(shifted)).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::VectorXd big = softmax(Eigen::Vector3d(1000, 1000, -1000));
  EXPECT_TRUE(big.allFinite());
  EXPECT_NEAR(big[0], 0.5, 1e-15);
}

TEST(Softmax, EmptyThrows) { EXPECT_THROW(softmax(Eigen::VectorXd()), ShapeError); }

TEST(Conv2d, DeltaKernelIsIdentity) {
  Rng rng(8);
  const Tensor in = random_tensor({1, 5, 4}, rng);
  EXPECT_EQ(conv2d(in, ConvParams::block_delta(1, 1, 0)), in);
}

TEST(Conv2d, ZeroKernelGivesBias) {
  Rng rng(9);
  ConvParams p = ConvParams::zeros(2, 2);
  p.bias << 0.5, -1.0;
  const Tensor out = conv2d(random_tensor({2, 3, 3}, rng), p);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_EQ(out(0, r, c), 0.5);
      EXPECT_EQ(out(1, r, c), -1.0);
    }
}

TEST(Conv2d, MatchesOracle) {
  Rng rng(10);
  const Tensor in = random_tensor({2, 5, 5}, rng);
  const ConvParams p = ConvParams::random(2, 3, rng);
  const Tensor a = conv2d(in, p), b = oracle::conv2d(in, p);
  EXPECT_LE((a.flat() - b.flat()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Conv2d, ChannelMismatchThrows) {
  EXPECT_THROW(conv2d(Tensor({3, 4, 4}), ConvParams::zeros(2, 2)), ShapeError);
}

TEST(Channels, ConcatAndSlice) {
  Tensor a({1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  Tensor b({1, 2, 2}, std::vector<double>{5, 6, 7, 8});
  const Tensor ab = concat_channels(a, b);
  EXPECT_EQ(ab.shape(), (std::vector<std::size_t>{2, 2, 2}));
  EXPECT_EQ(slice_channels(ab, 0, 1), a);
  EXPECT_EQ(slice_channels(ab, 1, 1), b);
  EXPECT_THROW(slice_channels(ab, 1, 2), ShapeError);
  EXPECT_THROW(concat_channels(a, Tensor({1, 2, 3})), ShapeError);
}

TEST(Channels, ConcatWithEmptyBlock) {
  Tensor a({1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  EXPECT_EQ(concat_channels(a, Tensor({0, 2, 2})), a);
}

TEST(GradCheck, ExactForQuadraticAndLinear) {
  Rng rng(11);
  const Eigen::VectorXd theta = random_vector(5, rng);
  const Eigen::VectorXd a = random_vector(5, rng);
  EXPECT_LE(grad_check([](const Eigen::VectorXd& t) { return t.dot(t); },
                       [](const Eigen::VectorXd& t) { return Eigen::VectorXd(2 * t); }, theta, 1e-6),
            1e-8);
  EXPECT_LE(grad_check([&](const Eigen::VectorXd& t) { return a.dot(t); },
                       [&](const Eigen::VectorXd&) { return a; }, theta, 1e-6),
            1e-10);
}

TEST(GradCheck, DetectsWrongGradient) {
  const Eigen::VectorXd theta = Eigen::VectorXd::Ones(3);
  EXPECT_GT(grad_check([](const Eigen::VectorXd& t) { return t.dot(t); },
                       [](const Eigen::VectorXd& t) { return Eigen::VectorXd(t); }, theta, 1e-6),
            0.1);
}

TEST(GradCheck, NonFiniteThrows) {
  EXPECT_THROW(grad_check([](const Eigen::VectorXd&) { return NAN; },
                          [](const Eigen::VectorXd& t) { return t; }, Eigen::VectorXd::Ones(2), 1e-6),
               NumericError);
}

TEST(GradCheck, BilinearLoss) {
  Rng rng(12);
  const Tensor f = random_tensor({1, 4, 4}, rng);
  const Eigen::Vector2d at(fixtures::interior_coordinate(rng, 4), fixtures::interior_coordinate(rng, 4));
  const auto loss = [&](const Eigen::VectorXd& t) { return bilinear_sample(f, t[0], t[1])[0]; };
  const auto grad = [&](const Eigen::VectorXd& t) {
    const auto g = bilinear_sample_backward(f, t[0], t[1], Eigen::VectorXd::Ones(1));
    return Eigen::VectorXd(Eigen::Vector2d(g.x, g.y));
  };
  EXPECT_LE(grad_check(loss, grad, at, 1e-6), 1e-5);
}

}  // namespace
}  // namespace bevfuse
