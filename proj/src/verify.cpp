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

#include "bevfuse/verify.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "bevfuse/deform_attn.hpp"
#include "bevfuse/fixtures.hpp"
#include "bevfuse/geometry.hpp"
#include "bevfuse/oracles.hpp"
#include "bevfuse/synthetic.hpp"
#include "bevfuse/tda.hpp"
#include "bevfuse/tensor.hpp"

namespace bevfuse {
namespace {

using fixtures::random_attention;
using fixtures::random_tensor;
using fixtures::random_vector;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

// Worst-case metric over a trial loop, compared against a bound.
CheckResult bounded(std::string name, double worst, double bound, int trials) {
  return {std::move(name), worst <= bound,
          "max " + fmt(worst) + " <= " + fmt(bound) + " over " + std::to_string(trials) + " cases"};
}

CheckResult boolean(std::string name, bool ok, std::string detail) {
  return {std::move(name), ok, std::move(detail)};
}

double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() ? (a - b).cwiseAbs().maxCoeff() : INFINITY;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() ? (a.flat() - b.flat()).cwiseAbs().maxCoeff() : INFINITY;
}

// ---------------------------------------------------------------- oracles

std::vector<CheckResult> oracle_suite() {
  std::vector<CheckResult> out;
  Rng rng(101);

  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const std::size_t heads = std::array<std::size_t, 3>{1, 2, 4}[k % 3];
    const std::size_t points = (k / 3) % 2 == 0 ? 1 : 4;
    const std::size_t c = heads * static_cast<std::size_t>(rng.uniform_int(1, 3));
    const auto h = static_cast<std::size_t>(rng.uniform_int(2, 16));
    const auto w = static_cast<std::size_t>(rng.uniform_int(2, 16));
    const DeformAttnParams p = random_attention(c, heads, points, rng);
    const Tensor value = random_tensor({c, h, w}, rng);
    const Eigen::VectorXd q = random_vector(static_cast<Eigen::Index>(c), rng);
    const Eigen::Vector2d ref(rng.uniform(-0.1, 1.1), rng.uniform(-0.1, 1.1));
    worst = std::max(worst, max_abs_diff(deform_attn(q, ref, value, p),
                                         oracle::deform_attn(q, ref, value, p)));
  }
  out.push_back(bounded("deform_attn matches naive loop", worst, 1e-10, 50));

  worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto c = static_cast<std::size_t>(rng.uniform_int(1, 4));
    const auto h = static_cast<std::size_t>(rng.uniform_int(1, 12));
    const auto w = static_cast<std::size_t>(rng.uniform_int(1, 12));
    const Tensor f = random_tensor({c, h, w}, rng);
    const double x = rng.uniform(-2.0, static_cast<double>(w) + 1.0);
    const double y = rng.uniform(-2.0, static_cast<double>(h) + 1.0);
    worst = std::max(worst, max_abs_diff(bilinear_sample(f, x, y), oracle::bilinear(f, x, y)));
  }
  out.push_back(bounded("bilinear_sample matches four-term formula", worst, 1e-12, 50));

  worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto cin = static_cast<std::size_t>(rng.uniform_int(1, 4));
    const auto cout = static_cast<std::size_t>(rng.uniform_int(1, 4));
    const auto h = static_cast<std::size_t>(rng.uniform_int(1, 9));
    const auto w = static_cast<std::size_t>(rng.uniform_int(1, 9));
    const Tensor in = random_tensor({cin, h, w}, rng);
    const ConvParams p = ConvParams::random(cin, cout, rng);
    worst = std::max(worst, max_abs_diff(conv2d(in, p), oracle::conv2d(in, p)));
  }
  out.push_back(bounded("conv2d matches nested-loop convolution", worst, 1e-12, 20));

  worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto in = rng.uniform_int(1, 10), o = rng.uniform_int(1, 10);
    const LinearParams p = fixtures::random_linear(in, o, rng);
    const Eigen::VectorXd x = random_vector(in, rng);
    worst = std::max(worst, max_abs_diff(linear_apply(p, x), oracle::linear(p, x)));
  }
  out.push_back(bounded("linear_apply matches double loop", worst, 1e-12, 50));

  {
    const DeformAttnParams p = random_attention(8, 4, 4, rng);
    const Tensor value = random_tensor({8, 8, 8}, rng);
    const Tensor queries = random_tensor({4, 4, 8}, rng);
    const Tensor refs = random_tensor({4, 4, 2}, rng, 0.0, 1.0);
    const Tensor grid = deform_attn_grid(queries, refs, value, p);
    const Tensor par = deform_attn_grid(queries, refs, value, p, Execution::parallel);
    bool exact = grid == par;
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        const Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(queries.data().data() + (i * 4 + j) * 8, 8);
        const Eigen::VectorXd one = deform_attn(q, {refs(i, j, 0), refs(i, j, 1)}, value, p);
        for (std::size_t k = 0; k < 8; ++k) exact = exact && one[static_cast<Eigen::Index>(k)] == grid(i, j, k);
      }
    }
    out.push_back(boolean("deform_attn_grid equals sequential per-cell calls", exact,
                          "4x4 grid, sequential and parallel, bit-exact"));
  }
  return out;
}

// -------------------------------------------------------------- gradients

// theta layout helpers for deform attention: query | value map | params.
struct AttnPack {
  std::size_t c, h, w;
  DeformAttnParams layout;

  Eigen::Index size() const {
    return static_cast<Eigen::Index>(c + c * h * w) + linear_count();
  }
  Eigen::Index linear_count() const {
    Eigen::Index n = 0;
    for (const LinearParams* l : {&layout.offset_proj, &layout.weight_proj, &layout.value_proj, &layout.output_proj})
      n += l->weight.size() + l->bias.size();
    return n;
  }
  Eigen::VectorXd pack(const Eigen::VectorXd& q, const Tensor& v, const DeformAttnParams& p) const {
    Eigen::VectorXd t(size());
    Eigen::Index at = 0;
    t.segment(at, q.size()) = q;
    at += q.size();
    t.segment(at, static_cast<Eigen::Index>(v.size())) = v.flat();
    at += static_cast<Eigen::Index>(v.size());
    for (const LinearParams* l : {&p.offset_proj, &p.weight_proj, &p.value_proj, &p.output_proj}) {
      t.segment(at, l->weight.size()) = l->weight.reshaped();
      at += l->weight.size();
      t.segment(at, l->bias.size()) = l->bias;
      at += l->bias.size();
    }
    return t;
  }
  Eigen::VectorXd pack_grads(const DeformAttnGrads& g) const {
    Eigen::VectorXd t(size());
    Eigen::Index at = 0;
    t.segment(at, g.query.size()) = g.query;
    at += g.query.size();
    t.segment(at, static_cast<Eigen::Index>(g.value_map.size())) = g.value_map.flat();
    at += static_cast<Eigen::Index>(g.value_map.size());
    for (const LinearGrads* l : {&g.params.offset_proj, &g.params.weight_proj, &g.params.value_proj, &g.params.output_proj}) {
      t.segment(at, l->weight.size()) = l->weight.reshaped();
      at += l->weight.size();
      t.segment(at, l->bias.size()) = l->bias;
      at += l->bias.size();
    }
    return t;
  }
  void unpack(const Eigen::VectorXd& t, Eigen::VectorXd& q, Tensor& v, DeformAttnParams& p) const {
    p = layout;
    Eigen::Index at = 0;
    q = t.segment(at, static_cast<Eigen::Index>(c));
    at += static_cast<Eigen::Index>(c);
    v = Tensor({c, h, w});
    v.flat() = t.segment(at, static_cast<Eigen::Index>(v.size()));
    at += static_cast<Eigen::Index>(v.size());
    for (LinearParams* l : {&p.offset_proj, &p.weight_proj, &p.value_proj, &p.output_proj}) {
      l->weight.reshaped() = t.segment(at, l->weight.size());
      at += l->weight.size();
      l->bias = t.segment(at, l->bias.size());
      at += l->bias.size();
    }
  }
};

std::vector<CheckResult> gradient_suite() {
  std::vector<CheckResult> out;
  Rng rng(202);
  constexpr double kEps = 1e-5;
  constexpr double kTol = 1e-4;

  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const auto c = static_cast<std::size_t>(rng.uniform_int(1, 3));
    const std::size_t h = 6, w = 7;
    const Eigen::VectorXd g_out = random_vector(static_cast<Eigen::Index>(c), rng);
    Eigen::VectorXd theta(static_cast<Eigen::Index>(c * h * w + 2));
    theta.head(static_cast<Eigen::Index>(c * h * w)) = random_tensor({c, h, w}, rng).flat();
    theta[theta.size() - 2] = fixtures::interior_coordinate(rng, w);
    theta[theta.size() - 1] = fixtures::interior_coordinate(rng, h);
    auto unpack = [&](const Eigen::VectorXd& t) {
      Tensor f({c, h, w});
      f.flat() = t.head(static_cast<Eigen::Index>(c * h * w));
      return f;
    };
    const auto f = [&](const Eigen::VectorXd& t) {
      return g_out.dot(bilinear_sample(unpack(t), t[t.size() - 2], t[t.size() - 1]));
    };
    const auto grad = [&](const Eigen::VectorXd& t) {
      const auto g = bilinear_sample_backward(unpack(t), t[t.size() - 2], t[t.size() - 1], g_out);
      Eigen::VectorXd out(t.size());
      out.head(static_cast<Eigen::Index>(c * h * w)) = g.feature.flat();
      out[t.size() - 2] = g.x;
      out[t.size() - 1] = g.y;
      return out;
    };
    worst = std::max(worst, grad_check(f, grad, theta, kEps));
  }
  out.push_back(bounded("bilinear_sample_backward grad_check", worst, kTol, 10));

  worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const std::size_t heads = k % 2 == 0 ? 2 : 1;
    const std::size_t points = k % 3 == 0 ? 4 : 2;
    const std::size_t c = heads * 2;
    AttnPack pack{c, 8, 8, random_attention(c, heads, points, rng, 1.5)};
    const Eigen::VectorXd g_out = random_vector(static_cast<Eigen::Index>(c), rng);
    const Eigen::Vector2d ref(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9));
    const Eigen::VectorXd theta = pack.pack(random_vector(static_cast<Eigen::Index>(c), rng),
                                            random_tensor({c, 8, 8}, rng), pack.layout);
    const auto f = [&](const Eigen::VectorXd& t) {
      Eigen::VectorXd q;
      Tensor v;
      DeformAttnParams p;
      pack.unpack(t, q, v, p);
      return g_out.dot(deform_attn(q, ref, v, p));
    };
    const auto grad = [&](const Eigen::VectorXd& t) {
      Eigen::VectorXd q;
      Tensor v;
      DeformAttnParams p;
      pack.unpack(t, q, v, p);
      return pack.pack_grads(deform_attn_backward(q, ref, v, p, g_out));
    };
    worst = std::max(worst, grad_check(f, grad, theta, kEps));
  }
  out.push_back(bounded("deform_attn_backward grad_check (8x8 map)", worst, kTol, 10));

  worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const std::size_t c = 4, heads = k % 2 == 0 ? 2 : 1, points = 2;
    const BevSpec spec = default_spec(16);
    Rng scene_rng(1000 + static_cast<std::uint64_t>(k));
    TrainingSample sample;
    for (std::size_t t = 0; t < 2; ++t) {
      sample.sequence.frames.emplace_back(spec, random_tensor({16, 16, c}, scene_rng, 0.0, 1.0));
      sample.sequence.poses.push_back(t == 0 ? EgoPose() : EgoPose(0.3, -0.2, 0.05));
    }
    sample.target = BevFeature(spec, random_tensor({16, 16, c}, scene_rng, 0.0, 1.0));
    const std::vector<TrainingSample> samples{sample};
    const TdaParams layout = fixtures::random_tda(c, heads, points, rng);
    const auto f = [&](const Eigen::VectorXd& t) { return tda_loss(samples, unflatten(layout, t)); };
    const auto grad = [&](const Eigen::VectorXd& t) {
      return flatten(tda_loss_gradient(samples, unflatten(layout, t)), layout.share_attention);
    };
    worst = std::max(worst, grad_check(f, grad, flatten(layout), kEps));
  }
  out.push_back(bounded("TDA training loss grad_check (16x16, T=2)", worst, kTol, 10));
  return out;
}

// --------------------------------------------------------------- geometry

std::vector<CheckResult> geometry_suite() {
  std::vector<CheckResult> out;
  Rng rng(303);

  double worst = 0.0;
  bool validity_agrees = true;
  for (int k = 0; k < 100; ++k) {
    const CameraModel cam = fixtures::random_camera(rng);
    // Generate in the camera frame (mostly in front) and map back to world.
    const Eigen::Vector3d p_cam(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-2, 30));
    const Eigen::Matrix3d r = cam.extrinsics.topLeftCorner<3, 3>();
    const Eigen::Vector3d p = r.transpose() * (p_cam - cam.extrinsics.block<3, 1>(0, 3));
    const Projection a = project_point(cam, p);
    const Projection b = oracle::project(cam, p);
    for (const auto& [x, y] : {std::pair{a.u, b.u}, std::pair{a.v, b.v}, std::pair{a.depth, b.depth}}) {
      worst = std::max(worst, std::abs(x - y) / std::max(1.0, std::abs(y)));
    }
    validity_agrees = validity_agrees && a.valid == b.valid;
  }
  out.push_back(bounded("project_point matches matrix-chain oracle", worst, 1e-9, 100));
  out.push_back(boolean("project_point validity matches oracle", validity_agrees, "100 cases"));

  double ident = 0.0, inverse = 0.0, compose = 0.0, frame = 0.0;
  for (int k = 0; k < 100; ++k) {
    const EgoPose a = fixtures::random_pose(rng), b = fixtures::random_pose(rng),
                  c = fixtures::random_pose(rng);
    const Eigen::Matrix3d i3 = Eigen::Matrix3d::Identity();
    ident = std::max(ident, (ego_motion_matrix(a, a) - i3).cwiseAbs().maxCoeff());
    inverse = std::max(inverse, (ego_motion_matrix(a, b) * ego_motion_matrix(b, a) - i3).cwiseAbs().maxCoeff());
    compose = std::max(compose, (ego_motion_matrix(b, c) * ego_motion_matrix(a, b) -
                                 ego_motion_matrix(a, c)).cwiseAbs().maxCoeff());
    const Eigen::Vector2d p(rng.uniform(-20, 20), rng.uniform(-20, 20));
    const Eigen::Vector3d mapped = ego_motion_matrix(a, b) * p.homogeneous();
    frame = std::max(frame, (mapped.head<2>() - oracle::ego_change(a, b, p)).cwiseAbs().maxCoeff());
  }
  out.push_back(bounded("ego_motion_matrix(a, a) = I", ident, 1e-12, 100));
  out.push_back(bounded("ego_motion_matrix(a, b) * ego_motion_matrix(b, a) = I", inverse, 1e-12, 100));
  out.push_back(bounded("ego_motion_matrix composition", compose, 1e-12, 100));
  out.push_back(bounded("ego_motion_matrix matches explicit frame change", frame, 1e-12, 100));

  {
    const BevSpec spec = default_spec(24);
    const BevFeature f(spec, random_tensor({24, 24, 3}, rng));
    const BevFeature warped = warp_bev(f, Eigen::Matrix3d::Identity());
    out.push_back(boolean("warp_bev identity is bit-exact", warped.data == f.data, "24x24x3"));
  }

  {
    // Static boxes rendered before and after the ego advances one cell.
    const BevSpec spec = default_spec(32);
    Scene scene;
    scene.spec = spec;
    scene.channels = 3;
    scene.ego = {EgoPose(1.0, -0.5, 0.0), EgoPose(1.0 + spec.cell_size, -0.5, 0.0)};
    for (int k = 0; k < 4; ++k) {
      Box b;
      b.center = {rng.uniform(-5, 5), rng.uniform(-5, 5), 0.5};
      b.half_extent = {rng.uniform(0.4, 2.0), rng.uniform(0.4, 2.0)};
      b.signature = random_vector(3, rng, 0.1, 1.0);
      scene.boxes.push_back(b);
    }
    const BevFeature moved = calibrate_step(render_lidar_bev(scene, 0), scene.ego[0], scene.ego[1]);
    const BevFeature truth = render_lidar_bev(scene, 1);
    bool exact = true;
    for (std::size_t i = 1; i + 1 < spec.cells_x; ++i)
      for (std::size_t j = 1; j + 1 < spec.cells_y; ++j) exact = exact && moved.cell(i, j) == truth.cell(i, j);
    out.push_back(boolean("one-cell ego translation matches re-render", exact, "interior cells, bit-exact"));
  }
  return out;
}

// ------------------------------------------------------------- properties

std::vector<CheckResult> property_suite() {
  std::vector<CheckResult> out;
  Rng rng(404);

  {
    double sum_err = 0.0, shift_err = 0.0;
    for (int k = 0; k < 50; ++k) {
      const Eigen::VectorXd x = random_vector(rng.uniform_int(1, 12), rng, -20, 20);
      const Eigen::VectorXd s = softmax(x);
      sum_err = std::max(sum_err, std::abs(s.sum() - 1.0));
      const double shift = rng.uniform(-100, 100);
      shift_err = std::max(shift_err, max_abs_diff(s, softmax((x.array() + shift).matrix())));
    }
    out.push_back(bounded("softmax sums to one", sum_err, 1e-12, 50));
    out.push_back(bounded("softmax shift invariance", shift_err, 1e-12, 50));
  }

  {
    double lin = 0.0;
    bool bounded_ok = true;
    for (int k = 0; k < 50; ++k) {
      const Tensor a = random_tensor({2, 6, 6}, rng), b = random_tensor({2, 6, 6}, rng);
      const double alpha = rng.uniform(-2, 2), beta = rng.uniform(-2, 2);
      Tensor mix({2, 6, 6});
      mix.flat() = alpha * a.flat() + beta * b.flat();
      const double x = rng.uniform(0, 5), y = rng.uniform(0, 5);
      lin = std::max(lin, max_abs_diff(bilinear_sample(mix, x, y),
                                       alpha * bilinear_sample(a, x, y) + beta * bilinear_sample(b, x, y)));
      const auto x0 = static_cast<std::size_t>(std::floor(x)), y0 = static_cast<std::size_t>(std::floor(y));
      const Eigen::VectorXd s = bilinear_sample(a, x, y);
      for (std::size_t c = 0; c < 2; ++c) {
        const double n[4] = {a(c, y0, x0), a(c, y0, x0 + 1), a(c, y0 + 1, x0), a(c, y0 + 1, x0 + 1)};
        const double lo = *std::min_element(n, n + 4), hi = *std::max_element(n, n + 4);
        bounded_ok = bounded_ok && s[static_cast<Eigen::Index>(c)] >= lo - 1e-12 &&
                     s[static_cast<Eigen::Index>(c)] <= hi + 1e-12;
      }
    }
    out.push_back(bounded("bilinear_sample is linear in the feature", lin, 1e-12, 50));
    out.push_back(boolean("bilinear_sample within neighbour range", bounded_ok, "50 cases"));
  }

  {
    const Tensor a = random_tensor({3, 7, 5}, rng), b = random_tensor({3, 7, 5}, rng);
    ConvParams p = ConvParams::random(3, 2, rng);
    p.bias.setZero();
    Tensor sum({3, 7, 5});
    sum.flat() = 2.0 * a.flat() - 0.5 * b.flat();
    Tensor expect = conv2d(a, p);
    expect.flat() = 2.0 * expect.flat() - 0.5 * conv2d(b, p).flat();
    out.push_back(bounded("conv2d is linear in its input", max_abs_diff(conv2d(sum, p), expect), 1e-12, 1));
    out.push_back(boolean("conv2d centred delta is the identity",
                          conv2d(a, ConvParams::block_delta(3, 3, 0)) == a, "3x7x5, bit-exact"));
  }

  {
    bool ok = true;
    for (int k = 0; k < 20; ++k) {
      const BevSpec spec = default_spec(20);
      const BevFeature f(spec, random_tensor({20, 20, 2}, rng, 0.0, 1.0));
      const EgoPose a = fixtures::random_pose(rng, 3.0), b = fixtures::random_pose(rng, 3.0);
      const BevFeature w = warp_bev(f, ego_motion_matrix(a, b));
      ok = ok && w.data.flat().sum() <= f.data.flat().sum() * 4.0 + 1e-9;
      // Pure translations keep the bilinear weights a partition of unity.
      const BevFeature t = warp_bev(f, ego_motion_matrix(EgoPose(), EgoPose(rng.uniform(-2, 2), rng.uniform(-2, 2), 0.0)));
      ok = ok && t.data.flat().sum() <= f.data.flat().sum() + 1e-9;
    }
    out.push_back(boolean("warp_bev translation loses mass only at the border", ok, "20 cases"));
  }

  {
    bool ok = true;
    double lin = 0.0;
    for (int k = 0; k < 20; ++k) {
      const DeformAttnParams p = random_attention(4, 2, 3, rng);
      const Eigen::VectorXd q = random_vector(4, rng);
      const Eigen::Vector2d ref(rng.uniform(0, 1), rng.uniform(0, 1));
      const Eigen::VectorXd logits = p.weight_proj.weight * q + p.weight_proj.bias;
      for (std::size_t h = 0; h < 2; ++h) {
        const Eigen::VectorXd w = softmax(logits.segment(static_cast<Eigen::Index>(h * 3), 3));
        ok = ok && (w.array() > 0).all() && std::abs(w.sum() - 1.0) <= 1e-12;
      }
      // Output minus the bias path is linear in the value map.
      DeformAttnParams nb = p;
      nb.value_proj.bias.setZero();
      nb.output_proj.bias.setZero();
      const Tensor a = random_tensor({4, 6, 6}, rng), b = random_tensor({4, 6, 6}, rng);
      Tensor mix({4, 6, 6});
      mix.flat() = 0.7 * a.flat() + 1.3 * b.flat();
      lin = std::max(lin, max_abs_diff(deform_attn(q, ref, mix, nb),
                                       0.7 * deform_attn(q, ref, a, nb) + 1.3 * deform_attn(q, ref, b, nb)));
    }
    out.push_back(boolean("attention weights positive and normalised per head", ok, "20 cases"));
    out.push_back(bounded("deform_attn linear in the value map", lin, 1e-12, 20));
  }

  {
    double worst = 0.0;
    for (const std::size_t heads : {1, 2, 4}) {
      for (const std::size_t points : {1, 4}) {
        const DeformAttnParams p = DeformAttnParams::identity(4, heads, points);
        const Tensor v = random_tensor({4, 9, 9}, rng);
        const Eigen::Vector2d ref(rng.uniform(0, 1), rng.uniform(0, 1));
        worst = std::max(worst, max_abs_diff(deform_attn(random_vector(4, rng), ref, v, p),
                                             bilinear_sample(v, ref.x() * 8, ref.y() * 8)));
      }
    }
    out.push_back(bounded("identity-style attention samples the reference point", worst, 1e-12, 6));
  }

  {
    const BevSpec spec = default_spec(12);
    FrameSequence seq;
    for (std::size_t t = 0; t < 4; ++t) {
      seq.frames.emplace_back(spec, random_tensor({12, 12, 4}, rng));
      seq.poses.push_back(fixtures::random_pose(rng, 1.0));
    }
    TdaParams p = fixtures::random_tda(4, 2, 2, rng);
    p.attn_prev.output_proj = LinearParams::zeros(4, 4);
    p.attn_curr.output_proj = LinearParams::zeros(4, 4);
    out.push_back(boolean("zero output projections give the residual identity",
                          temporal_fuse(seq, p).data == seq.frames.back().data, "T=4, bit-exact"));
    FrameSequence one{{seq.frames[0]}, {seq.poses[0]}};
    out.push_back(boolean("temporal_fuse with T=1 is the identity",
                          temporal_fuse(one, fixtures::random_tda(4, 2, 2, rng)).data == seq.frames[0].data,
                          "bit-exact"));
  }

  {
    const BevSpec spec = default_spec(32);
    const std::vector<TrainingSample> fam = moving_blob_family(5, 1, spec, 2.0, 3);
    Rng r1(9), r2(9);
    const auto a = train_tda_offsets(fam, TdaParams::random(8, 4, 4, r1), 3, 1e-2);
    const auto b = train_tda_offsets(fam, TdaParams::random(8, 4, 4, r2), 3, 1e-2);
    out.push_back(boolean("training is deterministic for a fixed seed",
                          a.loss_history == b.loss_history && a.final_loss == b.final_loss,
                          "3 steps, bit-identical loss history"));
  }

  {
    bool ok = true;
    const BevSpec spec = default_spec();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Scene s = static_scene(seed, spec);
      BevFeature f = render_lidar_bev(s, 0);
      for (std::size_t t = 1; t < s.frames(); ++t) f = calibrate_step(f, s.ego[t - 1], s.ego[t]);
      ok = ok && peak_displacement_error(f, ground_truth_bev(s, s.frames() - 1)) <= 1.0;
    }
    out.push_back(boolean("static box stays within one cell after chained calibration", ok, "5 seeded trajectories"));
  }
  return out;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"oracles", "gradients", "geometry", "properties"};
  return names;
}

SuiteReport run_suite(const std::string& name) {
  using Suite = std::vector<CheckResult> (*)();
  Suite suite = nullptr;
  if (name == "oracles") suite = oracle_suite;
  if (name == "gradients") suite = gradient_suite;
  if (name == "geometry") suite = geometry_suite;
  if (name == "properties") suite = property_suite;
  if (suite == nullptr) throw std::invalid_argument("unknown verification suite '" + name + "'");
  const auto t0 = std::chrono::steady_clock::now();
  SuiteReport report{name, suite(), 0.0};
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace bevfuse
