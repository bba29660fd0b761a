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

#include "bevfuse/oracles.hpp"

#include <cmath>
#include <vector>

namespace bevfuse::oracle {
namespace {

double pixel(const Tensor& f, long c, long r, long col) {
  const long h = static_cast<long>(f.dim(1)), w = static_cast<long>(f.dim(2));
  if (r < 0 || col < 0 || r >= h || col >= w) return 0.0;
  return f.data()[static_cast<std::size_t>((c * h + r) * w + col)];
}

double dot_row(const Eigen::MatrixXd& m, long row, const std::vector<double>& x) {
  double s = 0.0;
  for (long k = 0; k < m.cols(); ++k) s += m(row, k) * x[static_cast<std::size_t>(k)];
  return s;
}

}  // namespace

Eigen::VectorXd bilinear(const Tensor& feature, double x, double y) {
  const long c_count = static_cast<long>(feature.dim(0));
  const long x0 = static_cast<long>(std::floor(x)), y0 = static_cast<long>(std::floor(y));
  const double ax = x - static_cast<double>(x0), ay = y - static_cast<double>(y0);
  Eigen::VectorXd out(c_count);
  for (long c = 0; c < c_count; ++c) {
    out[c] = (1 - ax) * (1 - ay) * pixel(feature, c, y0, x0) +
             ax * (1 - ay) * pixel(feature, c, y0, x0 + 1) +
             (1 - ax) * ay * pixel(feature, c, y0 + 1, x0) +
             ax * ay * pixel(feature, c, y0 + 1, x0 + 1);
  }
  return out;
}

Eigen::VectorXd linear(const LinearParams& p, const Eigen::VectorXd& input) {
  Eigen::VectorXd out(p.weight.rows());
  for (long r = 0; r < p.weight.rows(); ++r) {
    double s = p.bias[r];
    for (long k = 0; k < p.weight.cols(); ++k) s += p.weight(r, k) * input[k];
    out[r] = s;
  }
  return out;
}

Tensor conv2d(const Tensor& input, const ConvParams& p) {
  const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t cout = p.kernel.dim(0);
  Tensor out({cout, h, w});
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        double s = p.bias[static_cast<long>(o)];
        for (std::size_t i = 0; i < cin; ++i) {
          for (long kr = 0; kr < 3; ++kr) {
            for (long kc = 0; kc < 3; ++kc) {
              const double k = p.kernel.data()[((o * cin + i) * 3 + static_cast<std::size_t>(kr)) * 3 +
                                               static_cast<std::size_t>(kc)];
              s += k * pixel(input, static_cast<long>(i), static_cast<long>(r) + kr - 1,
                             static_cast<long>(c) + kc - 1);
            }
          }
        }
        out(o, r, c) = s;
      }
    }
  }
  return out;
}

Eigen::VectorXd deform_attn(const Eigen::VectorXd& query, const Eigen::Vector2d& ref,
                            const Tensor& value_map, const DeformAttnParams& p) {
  const long c_count = static_cast<long>(value_map.dim(0));
  const long h = static_cast<long>(value_map.dim(1)), w = static_cast<long>(value_map.dim(2));
  const long heads = static_cast<long>(p.heads), points = static_cast<long>(p.points);
  const long d = c_count / heads;
  const std::vector<double> q(query.data(), query.data() + query.size());

  // value_proj applied to one pixel, zero outside the map.
  auto projected = [&](long r, long col, long channel) {
    if (r < 0 || col < 0 || r >= h || col >= w) return 0.0;
    double s = p.value_proj.bias[channel];
    for (long k = 0; k < c_count; ++k) s += p.value_proj.weight(channel, k) * pixel(value_map, k, r, col);
    return s;
  };

  std::vector<double> heads_out(static_cast<std::size_t>(c_count), 0.0);
  for (long hd = 0; hd < heads; ++hd) {
    std::vector<double> logits(static_cast<std::size_t>(points));
    double top = -INFINITY;
    for (long pt = 0; pt < points; ++pt) {
      logits[static_cast<std::size_t>(pt)] = p.weight_proj.bias[hd * points + pt] +
                                             dot_row(p.weight_proj.weight, hd * points + pt, q);
      top = std::max(top, logits[static_cast<std::size_t>(pt)]);
    }
    double z = 0.0;
    for (double& l : logits) z += (l = std::exp(l - top));
    for (long pt = 0; pt < points; ++pt) {
      const long k = hd * points + pt;
      const double weight = logits[static_cast<std::size_t>(pt)] / z;
      const double ox = p.offset_proj.bias[2 * k] + dot_row(p.offset_proj.weight, 2 * k, q);
      const double oy = p.offset_proj.bias[2 * k + 1] + dot_row(p.offset_proj.weight, 2 * k + 1, q);
      const double x = ref.x() * static_cast<double>(w - 1) + ox;
      const double y = ref.y() * static_cast<double>(h - 1) + oy;
      const long x0 = static_cast<long>(std::floor(x)), y0 = static_cast<long>(std::floor(y));
      const double ax = x - static_cast<double>(x0), ay = y - static_cast<double>(y0);
      for (long c = 0; c < d; ++c) {
        const long ch = hd * d + c;
        const double sample = (1 - ax) * (1 - ay) * projected(y0, x0, ch) +
                              ax * (1 - ay) * projected(y0, x0 + 1, ch) +
                              (1 - ax) * ay * projected(y0 + 1, x0, ch) +
                              ax * ay * projected(y0 + 1, x0 + 1, ch);
        heads_out[static_cast<std::size_t>(ch)] += weight * sample;
      }
    }
  }
  Eigen::VectorXd out(c_count);
  for (long r = 0; r < c_count; ++r) out[r] = p.output_proj.bias[r] + dot_row(p.output_proj.weight, r, heads_out);
  return out;
}

Projection project(const CameraModel& cam, const Eigen::Vector3d& p_world) {
  const double hom[4] = {p_world.x(), p_world.y(), p_world.z(), 1.0};
  double pc[4] = {0, 0, 0, 0};
  for (int r = 0; r < 4; ++r)
    for (int k = 0; k < 4; ++k) pc[r] += cam.extrinsics(r, k) * hom[k];
  double uvw[3] = {0, 0, 0};
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k) uvw[r] += cam.intrinsics(r, k) * pc[k];
  Projection out;
  out.depth = pc[2];
  out.u = uvw[0] / uvw[2];
  out.v = uvw[1] / uvw[2];
  out.valid = out.depth > 1e-6 && out.u >= 0 && out.v >= 0 &&
              out.u <= static_cast<double>(cam.width) - 1 && out.v <= static_cast<double>(cam.height) - 1;
  return out;
}

Eigen::Vector2d ego_change(const EgoPose& from, const EgoPose& to, const Eigen::Vector2d& p) {
  const double wx = from.x + std::cos(from.yaw) * p.x() - std::sin(from.yaw) * p.y();
  const double wy = from.y + std::sin(from.yaw) * p.x() + std::cos(from.yaw) * p.y();
  const double dx = wx - to.x, dy = wy - to.y;
  return {std::cos(to.yaw) * dx + std::sin(to.yaw) * dy, -std::sin(to.yaw) * dx + std::cos(to.yaw) * dy};
}

}  // namespace bevfuse::oracle
