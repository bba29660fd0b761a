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
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "bevfuse/rng.hpp"

namespace bevfuse {

/// Dense row-major array of doubles. Feature maps use the C x H x W layout,
/// BEV grids use cells_x x cells_y x C.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros(std::initializer_list<std::size_t> shape) {
    return Tensor(std::vector<std::size_t>(shape));
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  double operator[](std::size_t flat) const { return data_[flat]; }
  double& operator[](std::size_t flat) { return data_[flat]; }

  double operator()(std::size_t a, std::size_t b, std::size_t c) const {
    return data_[(a * shape_[1] + b) * shape_[2] + c];
  }
  double& operator()(std::size_t a, std::size_t b, std::size_t c) {
    return data_[(a * shape_[1] + b) * shape_[2] + c];
  }

  Eigen::Map<const Eigen::VectorXd> flat() const {
    return {data_.data(), static_cast<Eigen::Index>(data_.size())};
  }
  Eigen::Map<Eigen::VectorXd> flat() {
    return {data_.data(), static_cast<Eigen::Index>(data_.size())};
  }

  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

struct LinearParams {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out

  Eigen::Index in_dim() const { return weight.cols(); }
  Eigen::Index out_dim() const { return weight.rows(); }
  void validate() const;

  static LinearParams zeros(Eigen::Index in, Eigen::Index out);
  static LinearParams identity(Eigen::Index dim);
  /// uniform(-1/sqrt(in), 1/sqrt(in)) for weight and bias.
  static LinearParams random(Eigen::Index in, Eigen::Index out, Rng& rng);
};

/// 3x3 kernel, stride 1, zero padding 1.
struct ConvParams {
  Tensor kernel;         // C_out x C_in x 3 x 3
  Eigen::VectorXd bias;  // C_out

  std::size_t in_channels() const { return kernel.rank() == 4 ? kernel.dim(1) : 0; }
  std::size_t out_channels() const { return kernel.rank() == 4 ? kernel.dim(0) : 0; }
  void validate() const;

  static ConvParams zeros(std::size_t in, std::size_t out);
  static ConvParams random(std::size_t in, std::size_t out, Rng& rng);
  /// Centre tap set to `scale` on the (o, in_offset + o) diagonal for every output o.
  static ConvParams block_delta(std::size_t in, std::size_t out, std::size_t in_offset,
                                double scale = 1.0);
};

// Bilinear sampling of a C x H x W map at continuous pixel coordinates, with
// pixel centres on integer coordinates and zero padding outside the map.

Eigen::VectorXd bilinear_sample(const Tensor& feature, double x, double y);

struct BilinearSampleGrad {
  Tensor feature;
  double x = 0.0;
  double y = 0.0;
};

/// At integer coordinates the cell [floor(x), floor(x) + 1] supplies the
/// one-sided derivative.
BilinearSampleGrad bilinear_sample_backward(const Tensor& feature, double x, double y,
                                            const Eigen::VectorXd& grad_out);

Eigen::VectorXd linear_apply(const LinearParams& params, const Eigen::VectorXd& input);

/// Max-subtracted softmax. Throws ShapeError on empty input.
Eigen::VectorXd softmax(const Eigen::VectorXd& input);

Tensor conv2d(const Tensor& input, const ConvParams& params);

Tensor concat_channels(const Tensor& a, const Tensor& b);

/// Channel range [begin, begin + count) of a C x H x W tensor.
Tensor slice_channels(const Tensor& t, std::size_t begin, std::size_t count);

using ScalarFunction = std::function<double(const Eigen::VectorXd&)>;
using GradientFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// max_k |analytic_k - central_k| / max(1, |central_k|) with step eps.
/// Throws NumericError if f is non-finite at a probe point.
double grad_check(const ScalarFunction& f, const GradientFunction& analytic,
                  const Eigen::VectorXd& theta, double eps);

}  // namespace bevfuse
