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

#include <Eigen/Core>

#include <cmath>
#include <cstddef>

namespace bevfuse::detail {

// Strided view of a multi-channel 2D map. `x` runs along columns and `y`
// along rows; both address pixel centres at integer coordinates.
struct PlaneView {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t channels = 0;
  std::size_t row_stride = 0;
  std::size_t col_stride = 0;
  std::size_t channel_stride = 0;

  std::size_t offset(std::size_t r, std::size_t c) const { return r * row_stride + c * col_stride; }

  static PlaneView chw(std::size_t c, std::size_t h, std::size_t w) {
    return {h, w, c, w, 1, h * w};
  }
  // cells_x x cells_y x C grid addressed with x = i (first axis), y = j.
  static PlaneView bev(std::size_t cells_x, std::size_t cells_y, std::size_t c) {
    return {cells_y, cells_x, c, c, cells_y * c, 1};
  }
};

struct Corners {
  long x0 = 0;
  long y0 = 0;
  double fx = 0.0;
  double fy = 0.0;

  explicit Corners(double x, double y) {
    const double xf = std::floor(x);
    const double yf = std::floor(y);
    x0 = static_cast<long>(xf);
    y0 = static_cast<long>(yf);
    fx = x - xf;
    fy = y - yf;
  }
};

inline bool inside(const PlaneView& v, long r, long c) {
  return r >= 0 && c >= 0 && r < static_cast<long>(v.rows) && c < static_cast<long>(v.cols);
}

// Accumulates `scale * sample` for channels [c_begin, c_begin + out.size()) into out.
inline void sample_into(const double* data, const PlaneView& v, std::size_t c_begin, double x,
                        double y, double scale, Eigen::Ref<Eigen::VectorXd> out) {
  if (!(std::abs(x) < 1e15 && std::abs(y) < 1e15)) return;
  const Corners k(x, y);
  const long xs[2] = {k.x0, k.x0 + 1};
  const long ys[2] = {k.y0, k.y0 + 1};
  const double wx[2] = {1.0 - k.fx, k.fx};
  const double wy[2] = {1.0 - k.fy, k.fy};
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      if (!inside(v, ys[a], xs[b])) continue;
      const double w = scale * wy[a] * wx[b];
      if (w == 0.0) continue;
      const double* p = data + v.offset(ys[a], xs[b]) + c_begin * v.channel_stride;
      for (Eigen::Index c = 0; c < out.size(); ++c) out[c] += w * p[c * v.channel_stride];
    }
  }
}

// Backward of sample_into for one sample with upstream gradient `grad`
// (already multiplied by any scale). Feature gradients are accumulated
// into grad_data; returns d/dx and d/dy.
inline Eigen::Vector2d sample_backward_into(const double* data, const PlaneView& v,
                                            std::size_t c_begin, double x, double y,
                                            const Eigen::Ref<const Eigen::VectorXd>& grad,
                                            double* grad_data) {
  Eigen::Vector2d dxy = Eigen::Vector2d::Zero();
  if (!(std::abs(x) < 1e15 && std::abs(y) < 1e15)) return dxy;
  const Corners k(x, y);
  const long xs[2] = {k.x0, k.x0 + 1};
  const long ys[2] = {k.y0, k.y0 + 1};
  const double wx[2] = {1.0 - k.fx, k.fx};
  const double wy[2] = {1.0 - k.fy, k.fy};
  const double dwx[2] = {-1.0, 1.0};
  const double dwy[2] = {-1.0, 1.0};
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      if (!inside(v, ys[a], xs[b])) continue;
      const std::size_t base = v.offset(ys[a], xs[b]) + c_begin * v.channel_stride;
      const double w = wy[a] * wx[b];
      double dot = 0.0;
      for (Eigen::Index c = 0; c < grad.size(); ++c) {
        const std::size_t idx = base + c * v.channel_stride;
        dot += grad[c] * data[idx];
        if (grad_data != nullptr) grad_data[idx] += w * grad[c];
      }
      dxy.x() += dot * wy[a] * dwx[b];
      dxy.y() += dot * dwy[a] * wx[b];
    }
  }
  return dxy;
}

// Adjoint of sample_into with respect to the map: spreads `grad` onto the
// four neighbouring pixels.
inline void scatter_into(const PlaneView& v, std::size_t c_begin, double x, double y,
                         const Eigen::Ref<const Eigen::VectorXd>& grad, double* grad_data) {
  if (!(std::abs(x) < 1e15 && std::abs(y) < 1e15)) return;
  const Corners k(x, y);
  const long xs[2] = {k.x0, k.x0 + 1};
  const long ys[2] = {k.y0, k.y0 + 1};
  const double wx[2] = {1.0 - k.fx, k.fx};
  const double wy[2] = {1.0 - k.fy, k.fy};
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      if (!inside(v, ys[a], xs[b])) continue;
      const double w = wy[a] * wx[b];
      if (w == 0.0) continue;
      double* p = grad_data + v.offset(ys[a], xs[b]) + c_begin * v.channel_stride;
      for (Eigen::Index c = 0; c < grad.size(); ++c) p[c * v.channel_stride] += w * grad[c];
    }
  }
}

}  // namespace bevfuse::detail
