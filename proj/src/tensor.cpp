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

#include "bevfuse/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "bevfuse/errors.hpp"
#include "sampling.hpp"

namespace bevfuse {
namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

void require_rank3(const Tensor& t, const char* what) {
  if (t.rank() != 3) {
    throw ShapeError(std::string(what) + ": expected rank-3 tensor, got " +
                     shape_string(t.shape()));
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != product(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string(shape_));
  }
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void LinearParams::validate() const {
  if (bias.size() != weight.rows()) {
    throw ShapeError("linear bias length " + std::to_string(bias.size()) +
                     " != output dimension " + std::to_string(weight.rows()));
  }
}

LinearParams LinearParams::zeros(Eigen::Index in, Eigen::Index out) {
  return {Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)};
}

LinearParams LinearParams::identity(Eigen::Index dim) {
  return {Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim)};
}

LinearParams LinearParams::random(Eigen::Index in, Eigen::Index out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  LinearParams p = zeros(in, out);
  // Row-major fill order keeps the stream independent of Eigen's storage order.
  for (Eigen::Index r = 0; r < out; ++r)
    for (Eigen::Index c = 0; c < in; ++c) p.weight(r, c) = rng.uniform(-bound, bound);
  for (Eigen::Index r = 0; r < out; ++r) p.bias[r] = rng.uniform(-bound, bound);
  return p;
}

void ConvParams::validate() const {
  if (kernel.rank() != 4 || kernel.dim(2) != 3 || kernel.dim(3) != 3) {
    throw ShapeError("conv kernel must be C_out x C_in x 3 x 3, got " +
                     shape_string(kernel.shape()));
  }
  if (static_cast<std::size_t>(bias.size()) != kernel.dim(0)) {
    throw ShapeError("conv bias length does not match output channels");
  }
}

ConvParams ConvParams::zeros(std::size_t in, std::size_t out) {
  return {Tensor({out, in, 3, 3}), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out))};
}

ConvParams ConvParams::random(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in * 9));
  ConvParams p = zeros(in, out);
  for (double& w : p.kernel.data()) w = rng.uniform(-bound, bound);
  for (Eigen::Index o = 0; o < p.bias.size(); ++o) p.bias[o] = rng.uniform(-bound, bound);
  return p;
}

ConvParams ConvParams::block_delta(std::size_t in, std::size_t out, std::size_t in_offset,
                                   double scale) {
  if (in_offset + out > in) throw ShapeError("block_delta: block exceeds input channels");
  ConvParams p = zeros(in, out);
  for (std::size_t o = 0; o < out; ++o) p.kernel.data()[((o * in + in_offset + o) * 3 + 1) * 3 + 1] = scale;
  return p;
}

Eigen::VectorXd bilinear_sample(const Tensor& feature, double x, double y) {
  require_rank3(feature, "bilinear_sample");
  const auto view = detail::PlaneView::chw(feature.dim(0), feature.dim(1), feature.dim(2));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(feature.dim(0)));
  detail::sample_into(feature.data().data(), view, 0, x, y, 1.0, out);
  return out;
}

BilinearSampleGrad bilinear_sample_backward(const Tensor& feature, double x, double y,
                                            const Eigen::VectorXd& grad_out) {
  require_rank3(feature, "bilinear_sample_backward");
  if (static_cast<std::size_t>(grad_out.size()) != feature.dim(0)) {
    throw ShapeError("bilinear_sample_backward: grad_out length != channels");
  }
  const auto view = detail::PlaneView::chw(feature.dim(0), feature.dim(1), feature.dim(2));
  BilinearSampleGrad g{Tensor(feature.shape()), 0.0, 0.0};
  const Eigen::Vector2d dxy = detail::sample_backward_into(feature.data().data(), view, 0, x, y,
                                                           grad_out, g.feature.data().data());
  g.x = dxy.x();
  g.y = dxy.y();
  return g;
}

Eigen::VectorXd linear_apply(const LinearParams& params, const Eigen::VectorXd& input) {
  params.validate();
  if (input.size() != params.in_dim()) {
    throw ShapeError("linear_apply: input length " + std::to_string(input.size()) +
                     " != in dimension " + std::to_string(params.in_dim()));
  }
  return params.weight * input + params.bias;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& input) {
  if (input.size() == 0) throw ShapeError("softmax: empty input");
  const Eigen::VectorXd e = (input.array() - input.maxCoeff()).exp();
  return e / e.sum();
}

Tensor conv2d(const Tensor& input, const ConvParams& params) {
  require_rank3(input, "conv2d");
  params.validate();
  const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (params.in_channels() != cin) {
    throw ShapeError("conv2d: input has " + std::to_string(cin) + " channels, kernel expects " +
                     std::to_string(params.in_channels()));
  }
  const std::size_t cout = params.out_channels();
  Tensor out({cout, h, w});
  const auto in = input.data();
  const auto k = params.kernel.data();
  auto o = out.data();
  for (std::size_t co = 0; co < cout; ++co) {
    double* plane = o.data() + co * h * w;
    std::fill(plane, plane + h * w, params.bias[static_cast<Eigen::Index>(co)]);
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const double* src = in.data() + ci * h * w;
      const double* kk = k.data() + (co * cin + ci) * 9;
      for (long dy = -1; dy <= 1; ++dy) {
        for (long dx = -1; dx <= 1; ++dx) {
          const double kv = kk[(dy + 1) * 3 + (dx + 1)];
          if (kv == 0.0) continue;
          const long r_lo = std::max(0L, -dy), r_hi = std::min<long>(h, static_cast<long>(h) - dy);
          const long c_lo = std::max(0L, -dx), c_hi = std::min<long>(w, static_cast<long>(w) - dx);
          for (long r = r_lo; r < r_hi; ++r) {
            const double* srow = src + (r + dy) * static_cast<long>(w) + dx;
            double* drow = plane + r * static_cast<long>(w);
            for (long c = c_lo; c < c_hi; ++c) drow[c] += kv * srow[c];
          }
        }
      }
    }
  }
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank3(a, "concat_channels");
  require_rank3(b, "concat_channels");
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
    throw ShapeError("concat_channels: spatial mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
  std::vector<double> data(a.data().begin(), a.data().end());
  data.insert(data.end(), b.data().begin(), b.data().end());
  return Tensor({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)}, std::move(data));
}

Tensor slice_channels(const Tensor& t, std::size_t begin, std::size_t count) {
  require_rank3(t, "slice_channels");
  if (begin + count > t.dim(0)) throw ShapeError("slice_channels: range exceeds channels");
  const std::size_t plane = t.dim(1) * t.dim(2);
  const auto src = t.data().subspan(begin * plane, count * plane);
  return Tensor({count, t.dim(1), t.dim(2)}, std::vector<double>(src.begin(), src.end()));
}

double grad_check(const ScalarFunction& f, const GradientFunction& analytic,
                  const Eigen::VectorXd& theta, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("grad_check: eps must be positive");
  const Eigen::VectorXd g = analytic(theta);
  if (g.size() != theta.size()) throw ShapeError("grad_check: gradient length mismatch");
  double worst = 0.0;
  Eigen::VectorXd probe = theta;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    probe[k] = theta[k] + eps;
    const double up = f(probe);
    probe[k] = theta[k] - eps;
    const double down = f(probe);
    probe[k] = theta[k];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("grad_check: non-finite function value at coordinate " +
                         std::to_string(k));
    }
    const double central = (up - down) / (2.0 * eps);
    worst = std::max(worst, std::abs(g[k] - central) / std::max(1.0, std::abs(central)));
  }
  return worst;
}

}  // namespace bevfuse
