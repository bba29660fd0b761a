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

#include <cstddef>

#include "bevfuse/tensor.hpp"

namespace bevfuse {

/// Single-level multi-head deformable attention parameters.
///
/// Offsets are laid out as ((head * points + point) * 2 + {x, y}) and are in
/// pixel units of the value map; attention logits as (head * points + point).
struct DeformAttnParams {
  std::size_t heads = 1;
  std::size_t points = 1;
  LinearParams offset_proj;  // C -> heads * points * 2
  LinearParams weight_proj;  // C -> heads * points
  LinearParams value_proj;   // C -> C
  LinearParams output_proj;  // C -> C

  std::size_t channels() const { return static_cast<std::size_t>(value_proj.in_dim()); }
  std::size_t head_dim() const { return channels() / heads; }
  void validate() const;

  /// Random projections, except offset_proj which starts at exactly zero.
  static DeformAttnParams random(std::size_t channels, std::size_t heads, std::size_t points,
                                 Rng& rng);
  /// Zero offsets, uniform weights, identity value and output projections:
  /// attention reduces to sampling at the reference point.
  static DeformAttnParams identity(std::size_t channels, std::size_t heads, std::size_t points);
};

struct LinearGrads {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;

  static LinearGrads zeros_like(const LinearParams& p) {
    return {Eigen::MatrixXd::Zero(p.weight.rows(), p.weight.cols()),
            Eigen::VectorXd::Zero(p.bias.size())};
  }
  LinearGrads& operator+=(const LinearGrads& o) {
    weight += o.weight;
    bias += o.bias;
    return *this;
  }
};

struct DeformAttnParamGrads {
  LinearGrads offset_proj;
  LinearGrads weight_proj;
  LinearGrads value_proj;
  LinearGrads output_proj;

  static DeformAttnParamGrads zeros_like(const DeformAttnParams& p);
  DeformAttnParamGrads& operator+=(const DeformAttnParamGrads& o);
};

/// value_proj applied to every pixel of a C x H x W map.
Tensor project_values(const Tensor& value_map, const LinearParams& value_proj);

/// Reference point in normalized [0, 1]^2 map coordinates; points outside
/// that range sample into the zero padding.
Eigen::VectorXd deform_attn(const Eigen::VectorXd& query, const Eigen::Vector2d& ref_point,
                            const Tensor& value_map, const DeformAttnParams& params);

/// Same as deform_attn with the value projection already applied.
Eigen::VectorXd deform_attn_projected(const Eigen::VectorXd& query,
                                      const Eigen::Vector2d& ref_point, const Tensor& projected,
                                      const DeformAttnParams& params);

struct DeformAttnGrads {
  Eigen::VectorXd query;
  Tensor value_map;
  DeformAttnParamGrads params;
};

DeformAttnGrads deform_attn_backward(const Eigen::VectorXd& query,
                                     const Eigen::Vector2d& ref_point, const Tensor& value_map,
                                     const DeformAttnParams& params,
                                     const Eigen::VectorXd& grad_out);

enum class Execution { sequential, parallel };

/// Per-cell deform_attn over a cells_x x cells_y grid of queries (X x Y x C)
/// and reference points (X x Y x 2).
Tensor deform_attn_grid(const Tensor& queries, const Tensor& ref_points, const Tensor& value_map,
                        const DeformAttnParams& params,
                        Execution execution = Execution::sequential);

struct DeformAttnGridGrads {
  Tensor queries;    // X x Y x C
  Tensor value_map;  // C x H x W
  DeformAttnParamGrads params;
};

DeformAttnGridGrads deform_attn_grid_backward(const Tensor& queries, const Tensor& ref_points,
                                              const Tensor& value_map,
                                              const DeformAttnParams& params,
                                              const Tensor& grad_out);

}  // namespace bevfuse
