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

// Seeded random inputs shared by the verification suites and the tests.

#include <Eigen/Geometry>

#include <vector>

#include "bevfuse/deform_attn.hpp"
#include "bevfuse/geometry.hpp"
#include "bevfuse/rng.hpp"
#include "bevfuse/tda.hpp"

namespace bevfuse::fixtures {

inline Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index k = 0; k < n; ++k) v[k] = rng.uniform(lo, hi);
  return v;
}

inline LinearParams random_linear(Eigen::Index in, Eigen::Index out, Rng& rng, double scale = 1.0) {
  LinearParams p = LinearParams::zeros(in, out);
  for (Eigen::Index r = 0; r < out; ++r)
    for (Eigen::Index c = 0; c < in; ++c) p.weight(r, c) = rng.uniform(-scale, scale);
  for (Eigen::Index r = 0; r < out; ++r) p.bias[r] = rng.uniform(-scale, scale);
  return p;
}

/// Random attention including non-zero offsets of roughly `offset_scale` pixels.
inline DeformAttnParams random_attention(std::size_t channels, std::size_t heads,
                                         std::size_t points, Rng& rng,
                                         double offset_scale = 2.0) {
  DeformAttnParams p = DeformAttnParams::random(channels, heads, points, rng);
  const auto c = static_cast<Eigen::Index>(channels);
  p.offset_proj = random_linear(c, p.offset_proj.out_dim(), rng, offset_scale / std::sqrt(c + 1.0));
  return p;
}

inline TdaParams random_tda(std::size_t channels, std::size_t heads, std::size_t points, Rng& rng,
                            double offset_scale = 1.5) {
  TdaParams p = TdaParams::random(channels, heads, points, rng);
  p.attn_prev = random_attention(channels, heads, points, rng, offset_scale);
  p.attn_curr = random_attention(channels, heads, points, rng, offset_scale);
  return p;
}

inline Eigen::Matrix3d random_rotation(Rng& rng) {
  Eigen::Quaterniond q(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                       rng.uniform(-1, 1));
  if (q.norm() < 1e-3) q = Eigen::Quaterniond::Identity();
  return q.normalized().toRotationMatrix();
}

inline CameraModel random_camera(Rng& rng) {
  Eigen::Matrix4d ext = Eigen::Matrix4d::Identity();
  ext.topLeftCorner<3, 3>() = random_rotation(rng);
  ext.block<3, 1>(0, 3) = Eigen::Vector3d(rng.uniform(-10, 10), rng.uniform(-10, 10),
                                          rng.uniform(-10, 10));
  const auto w = static_cast<std::size_t>(rng.uniform_int(16, 128));
  const auto h = static_cast<std::size_t>(rng.uniform_int(16, 128));
  return CameraModel::make(rng.uniform(20, 200), rng.uniform(20, 200),
                           rng.uniform(0, static_cast<double>(w - 1)),
                           rng.uniform(0, static_cast<double>(h - 1)), ext, w, h);
}

inline EgoPose random_pose(Rng& rng, double extent = 20.0) {
  return {rng.uniform(-extent, extent), rng.uniform(-extent, extent), rng.uniform(-3.1, 3.1)};
}

/// Non-integer coordinate strictly inside [0, n - 1].
inline double interior_coordinate(Rng& rng, std::size_t n) {
  const double x = rng.uniform(0.0, static_cast<double>(n - 1));
  const double frac = x - std::floor(x);
  return (frac < 0.05 || frac > 0.95) ? std::floor(x) + 0.5 : x;
}

}  // namespace bevfuse::fixtures
