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

#include "bevfuse/deform_attn.hpp"

#include <algorithm>
#include <thread>
#include <vector>

#include "bevfuse/errors.hpp"
#include "sampling.hpp"

namespace bevfuse {
namespace {

void check_linear(const LinearParams& p, Eigen::Index in, Eigen::Index out, const char* name) {
  p.validate();
  if (p.in_dim() != in || p.out_dim() != out) {
    throw ShapeError(std::string("deform_attn: ") + name + " must map " + std::to_string(in) +
                     " -> " + std::to_string(out));
  }
}

void check_value_map(const Tensor& value_map, const DeformAttnParams& params) {
  if (value_map.rank() != 3 || value_map.dim(0) != params.channels()) {
    throw ShapeError("deform_attn: value map must be C x H x W with C = " +
                     std::to_string(params.channels()));
  }
}

Eigen::Vector2d pixel_scale(const Tensor& map) {
  return {static_cast<double>(map.dim(2) - 1), static_cast<double>(map.dim(1) - 1)};
}

// Everything the backward pass needs from a forward evaluation.
struct ForwardState {
  Eigen::VectorXd offsets;
  Eigen::VectorXd weights;   // softmax per head
  Eigen::MatrixXd samples;   // head_dim x (heads * points), column per (head, point)
  Eigen::VectorXd attended;  // concatenated head outputs, length C
  Eigen::VectorXd output;
};

Eigen::Vector2d sample_location(const Eigen::Vector2d& ref, const Eigen::Vector2d& scale,
                                const Eigen::VectorXd& offsets, std::size_t k) {
  return {ref.x() * scale.x() + offsets[static_cast<Eigen::Index>(2 * k)],
          ref.y() * scale.y() + offsets[static_cast<Eigen::Index>(2 * k + 1)]};
}

ForwardState forward(const Eigen::VectorXd& query, const Eigen::Vector2d& ref,
                     const Tensor& projected, const DeformAttnParams& p) {
  const std::size_t heads = p.heads, points = p.points, d = p.head_dim();
  const auto view = detail::PlaneView::chw(projected.dim(0), projected.dim(1), projected.dim(2));
  const Eigen::Vector2d scale = pixel_scale(projected);

  ForwardState s;
  s.offsets = p.offset_proj.weight * query + p.offset_proj.bias;
  const Eigen::VectorXd logits = p.weight_proj.weight * query + p.weight_proj.bias;
  s.weights.resize(logits.size());
  s.samples = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                    static_cast<Eigen::Index>(heads * points));
  s.attended = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.channels()));
  for (std::size_t h = 0; h < heads; ++h) {
    const auto hp = static_cast<Eigen::Index>(h * points);
    const auto np = static_cast<Eigen::Index>(points);
    s.weights.segment(hp, np) = softmax(logits.segment(hp, np));
    auto head_out = s.attended.segment(static_cast<Eigen::Index>(h * d), static_cast<Eigen::Index>(d));
    for (std::size_t q = 0; q < points; ++q) {
      const std::size_t k = h * points + q;
      const Eigen::Vector2d loc = sample_location(ref, scale, s.offsets, k);
      auto col = s.samples.col(static_cast<Eigen::Index>(k));
      detail::sample_into(projected.data().data(), view, h * d, loc.x(), loc.y(), 1.0, col);
      head_out += s.weights[static_cast<Eigen::Index>(k)] * col;
    }
  }
  s.output = p.output_proj.weight * s.attended + p.output_proj.bias;
  return s;
}

// Accumulates parameter gradients (except value_proj) and the gradient with
// respect to the projected value map; returns the query gradient.
Eigen::VectorXd backward(const Eigen::VectorXd& query, const Eigen::Vector2d& ref,
                         const Tensor& projected, const DeformAttnParams& p,
                         const Eigen::VectorXd& grad_out, DeformAttnParamGrads& grads,
                         Tensor& grad_projected) {
  const ForwardState s = forward(query, ref, projected, p);
  const std::size_t heads = p.heads, points = p.points, d = p.head_dim();
  const auto view = detail::PlaneView::chw(projected.dim(0), projected.dim(1), projected.dim(2));
  const Eigen::Vector2d scale = pixel_scale(projected);

  grads.output_proj.weight.noalias() += grad_out * s.attended.transpose();
  grads.output_proj.bias += grad_out;
  const Eigen::VectorXd grad_attended = p.output_proj.weight.transpose() * grad_out;

  Eigen::VectorXd grad_offsets = Eigen::VectorXd::Zero(s.offsets.size());
  Eigen::VectorXd grad_logits = Eigen::VectorXd::Zero(s.weights.size());
  for (std::size_t h = 0; h < heads; ++h) {
    const auto g_head =
        grad_attended.segment(static_cast<Eigen::Index>(h * d), static_cast<Eigen::Index>(d));
    const auto hp = static_cast<Eigen::Index>(h * points);
    const auto np = static_cast<Eigen::Index>(points);
    Eigen::VectorXd grad_w(np);
    for (std::size_t q = 0; q < points; ++q) {
      const std::size_t k = h * points + q;
      const auto ki = static_cast<Eigen::Index>(k);
      grad_w[static_cast<Eigen::Index>(q)] = g_head.dot(s.samples.col(ki));
      const Eigen::Vector2d loc = sample_location(ref, scale, s.offsets, k);
      const Eigen::VectorXd g_sample = s.weights[ki] * g_head;
      const Eigen::Vector2d g_loc = detail::sample_backward_into(
          projected.data().data(), view, h * d, loc.x(), loc.y(), g_sample,
          grad_projected.data().data());
      grad_offsets[2 * ki] = g_loc.x();
      grad_offsets[2 * ki + 1] = g_loc.y();
    }
    const Eigen::VectorXd w = s.weights.segment(hp, np);
    grad_logits.segment(hp, np) = w.array() * (grad_w.array() - w.dot(grad_w));
  }

  grads.offset_proj.weight.noalias() += grad_offsets * query.transpose();
  grads.offset_proj.bias += grad_offsets;
  grads.weight_proj.weight.noalias() += grad_logits * query.transpose();
  grads.weight_proj.bias += grad_logits;
  return p.offset_proj.weight.transpose() * grad_offsets +
         p.weight_proj.weight.transpose() * grad_logits;
}

// Pulls the projected-map gradient back through value_proj.
Tensor value_projection_backward(const Tensor& value_map, const LinearParams& value_proj,
                                 const Tensor& grad_projected, LinearGrads& grads) {
  const auto c = static_cast<Eigen::Index>(value_map.dim(0));
  const auto n = static_cast<Eigen::Index>(value_map.dim(1) * value_map.dim(2));
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMat> v(value_map.data().data(), c, n);
  const Eigen::Map<const RowMat> g(grad_projected.data().data(), c, n);
  grads.weight.noalias() += g * v.transpose();
  grads.bias += g.rowwise().sum();
  Tensor grad_values(value_map.shape());
  Eigen::Map<RowMat>(grad_values.data().data(), c, n).noalias() = value_proj.weight.transpose() * g;
  return grad_values;
}

void check_grid(const Tensor& queries, const Tensor& ref_points, const DeformAttnParams& params) {
  if (queries.rank() != 3 || queries.dim(2) != params.channels()) {
    throw ShapeError("deform_attn_grid: queries must be X x Y x C");
  }
  if (ref_points.rank() != 3 || ref_points.dim(0) != queries.dim(0) ||
      ref_points.dim(1) != queries.dim(1) || ref_points.dim(2) != 2) {
    throw ShapeError("deform_attn_grid: reference points must be X x Y x 2");
  }
}

}  // namespace

void DeformAttnParams::validate() const {
  if (heads == 0 || points == 0) throw ShapeError("deform_attn: heads and points must be positive");
  const auto c = value_proj.in_dim();
  if (c == 0 || static_cast<std::size_t>(c) % heads != 0) {
    throw ShapeError("deform_attn: channels " + std::to_string(c) + " not divisible by heads " +
                     std::to_string(heads));
  }
  const auto hp = static_cast<Eigen::Index>(heads * points);
  check_linear(offset_proj, c, 2 * hp, "offset_proj");
  check_linear(weight_proj, c, hp, "weight_proj");
  check_linear(value_proj, c, c, "value_proj");
  check_linear(output_proj, c, c, "output_proj");
}

DeformAttnParams DeformAttnParams::random(std::size_t channels, std::size_t heads,
                                          std::size_t points, Rng& rng) {
  const auto c = static_cast<Eigen::Index>(channels);
  const auto hp = static_cast<Eigen::Index>(heads * points);
  DeformAttnParams p;
  p.heads = heads;
  p.points = points;
  p.offset_proj = LinearParams::zeros(c, 2 * hp);
  p.weight_proj = LinearParams::random(c, hp, rng);
  p.value_proj = LinearParams::random(c, c, rng);
  p.output_proj = LinearParams::random(c, c, rng);
  p.validate();
  return p;
}

DeformAttnParams DeformAttnParams::identity(std::size_t channels, std::size_t heads,
                                            std::size_t points) {
  const auto c = static_cast<Eigen::Index>(channels);
  const auto hp = static_cast<Eigen::Index>(heads * points);
  DeformAttnParams p;
  p.heads = heads;
  p.points = points;
  p.offset_proj = LinearParams::zeros(c, 2 * hp);
  p.weight_proj = LinearParams::zeros(c, hp);
  p.value_proj = LinearParams::identity(c);
  p.output_proj = LinearParams::identity(c);
  p.validate();
  return p;
}

DeformAttnParamGrads DeformAttnParamGrads::zeros_like(const DeformAttnParams& p) {
  return {LinearGrads::zeros_like(p.offset_proj), LinearGrads::zeros_like(p.weight_proj),
          LinearGrads::zeros_like(p.value_proj), LinearGrads::zeros_like(p.output_proj)};
}

DeformAttnParamGrads& DeformAttnParamGrads::operator+=(const DeformAttnParamGrads& o) {
  offset_proj += o.offset_proj;
  weight_proj += o.weight_proj;
  value_proj += o.value_proj;
  output_proj += o.output_proj;
  return *this;
}

Tensor project_values(const Tensor& value_map, const LinearParams& value_proj) {
  if (value_map.rank() != 3 || static_cast<Eigen::Index>(value_map.dim(0)) != value_proj.in_dim()) {
    throw ShapeError("project_values: value map channels do not match the projection");
  }
  const auto cin = static_cast<Eigen::Index>(value_map.dim(0));
  const auto cout = value_proj.out_dim();
  const auto n = static_cast<Eigen::Index>(value_map.dim(1) * value_map.dim(2));
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Tensor out({static_cast<std::size_t>(cout), value_map.dim(1), value_map.dim(2)});
  const Eigen::Map<const RowMat> v(value_map.data().data(), cin, n);
  Eigen::Map<RowMat> o(out.data().data(), cout, n);
  o.noalias() = value_proj.weight * v;
  o.colwise() += value_proj.bias;
  return out;
}

Eigen::VectorXd deform_attn_projected(const Eigen::VectorXd& query,
                                      const Eigen::Vector2d& ref_point, const Tensor& projected,
                                      const DeformAttnParams& params) {
  params.validate();
  check_value_map(projected, params);
  if (static_cast<std::size_t>(query.size()) != params.channels()) {
    throw ShapeError("deform_attn: query length must equal channels");
  }
  return forward(query, ref_point, projected, params).output;
}

Eigen::VectorXd deform_attn(const Eigen::VectorXd& query, const Eigen::Vector2d& ref_point,
                            const Tensor& value_map, const DeformAttnParams& params) {
  params.validate();
  check_value_map(value_map, params);
  return deform_attn_projected(query, ref_point, project_values(value_map, params.value_proj),
                               params);
}

DeformAttnGrads deform_attn_backward(const Eigen::VectorXd& query,
                                     const Eigen::Vector2d& ref_point, const Tensor& value_map,
                                     const DeformAttnParams& params,
                                     const Eigen::VectorXd& grad_out) {
  params.validate();
  check_value_map(value_map, params);
  if (static_cast<std::size_t>(query.size()) != params.channels() ||
      grad_out.size() != query.size()) {
    throw ShapeError("deform_attn_backward: query and grad_out must have C entries");
  }
  const Tensor projected = project_values(value_map, params.value_proj);
  DeformAttnGrads g{Eigen::VectorXd(), Tensor(), DeformAttnParamGrads::zeros_like(params)};
  Tensor grad_projected(projected.shape());
  g.query = backward(query, ref_point, projected, params, grad_out, g.params, grad_projected);
  g.value_map =
      value_projection_backward(value_map, params.value_proj, grad_projected, g.params.value_proj);
  return g;
}

Tensor deform_attn_grid(const Tensor& queries, const Tensor& ref_points, const Tensor& value_map,
                        const DeformAttnParams& params, Execution execution) {
  params.validate();
  check_value_map(value_map, params);
  check_grid(queries, ref_points, params);
  const Tensor projected = project_values(value_map, params.value_proj);
  const std::size_t nx = queries.dim(0), ny = queries.dim(1), c = params.channels();
  Tensor out({nx, ny, c});

  auto run_rows = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < ny; ++j) {
        const std::size_t cell = i * ny + j;
        const Eigen::Map<const Eigen::VectorXd> q(queries.data().data() + cell * c,
                                                  static_cast<Eigen::Index>(c));
        const Eigen::Vector2d ref(ref_points(i, j, 0), ref_points(i, j, 1));
        Eigen::Map<Eigen::VectorXd>(out.data().data() + cell * c, static_cast<Eigen::Index>(c)) =
            forward(q, ref, projected, params).output;
      }
    }
  };

  const std::size_t workers =
      execution == Execution::parallel
          ? std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, nx)
          : 1;
  if (workers <= 1) {
    run_rows(0, nx);
    return out;
  }
  // Each cell is written by exactly one worker, so the result does not depend
  // on scheduling.
  std::vector<std::jthread> pool;
  const std::size_t chunk = (nx + workers - 1) / workers;
  for (std::size_t begin = 0; begin < nx; begin += chunk) {
    pool.emplace_back(run_rows, begin, std::min(nx, begin + chunk));
  }
  pool.clear();
  return out;
}

DeformAttnGridGrads deform_attn_grid_backward(const Tensor& queries, const Tensor& ref_points,
                                              const Tensor& value_map,
                                              const DeformAttnParams& params,
                                              const Tensor& grad_out) {
  params.validate();
  check_value_map(value_map, params);
  check_grid(queries, ref_points, params);
  if (grad_out.shape() != queries.shape()) {
    throw ShapeError("deform_attn_grid_backward: grad_out must match the query grid");
  }
  const Tensor projected = project_values(value_map, params.value_proj);
  const std::size_t nx = queries.dim(0), ny = queries.dim(1), c = params.channels();
  DeformAttnGridGrads g{Tensor(queries.shape()), Tensor(),
                        DeformAttnParamGrads::zeros_like(params)};
  Tensor grad_projected(projected.shape());
  const auto ci = static_cast<Eigen::Index>(c);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      const std::size_t cell = i * ny + j;
      const Eigen::Map<const Eigen::VectorXd> go(grad_out.data().data() + cell * c, ci);
      if (go.isZero(0.0)) continue;
      const Eigen::Map<const Eigen::VectorXd> q(queries.data().data() + cell * c, ci);
      const Eigen::Vector2d ref(ref_points(i, j, 0), ref_points(i, j, 1));
      Eigen::Map<Eigen::VectorXd>(g.queries.data().data() + cell * c, ci) =
          backward(q, ref, projected, params, go, g.params, grad_projected);
    }
  }
  g.value_map =
      value_projection_backward(value_map, params.value_proj, grad_projected, g.params.value_proj);
  return g;
}

}  // namespace bevfuse
