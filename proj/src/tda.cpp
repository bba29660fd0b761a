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

#include "bevfuse/tda.hpp"

#include <cmath>
#include <functional>

#include "bevfuse/errors.hpp"

namespace bevfuse {
namespace {

// Visits every linear block in flatten order.
template <class Params, class Fn>
void visit_attention(Params& attn, Fn&& fn) {
  fn(attn.offset_proj);
  fn(attn.weight_proj);
  fn(attn.value_proj);
  fn(attn.output_proj);
}

template <class Params, class Fn>
void visit(Params& p, Fn&& fn) {
  fn(p.query_reduce);
  visit_attention(p.attn_prev, fn);
  if (!p.share_attention) visit_attention(p.attn_curr, fn);
}

template <class Grads, class Fn>
void visit(Grads& g, bool share, Fn&& fn) {
  fn(g.query_reduce);
  visit_attention(g.attn_prev, fn);
  if (!share) visit_attention(g.attn_curr, fn);
}

template <class Linear>
Eigen::Index linear_size(const Linear& l) {
  return l.weight.size() + l.bias.size();
}

template <class Linear>
void write_linear(const Linear& l, Eigen::VectorXd& out, Eigen::Index& at) {
  for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
    for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out[at++] = l.weight(r, c);
  for (Eigen::Index r = 0; r < l.bias.size(); ++r) out[at++] = l.bias[r];
}

Tensor reference_grid(const BevSpec& spec) {
  Tensor refs({spec.cells_x, spec.cells_y, 2});
  const double sx = spec.cells_x > 1 ? static_cast<double>(spec.cells_x - 1) : 1.0;
  const double sy = spec.cells_y > 1 ? static_cast<double>(spec.cells_y - 1) : 1.0;
  for (std::size_t i = 0; i < spec.cells_x; ++i) {
    for (std::size_t j = 0; j < spec.cells_y; ++j) {
      refs(i, j, 0) = static_cast<double>(i) / sx;
      refs(i, j, 1) = static_cast<double>(j) / sy;
    }
  }
  return refs;
}

Tensor reduce_concat(const BevFeature& a, const BevFeature& b, const LinearParams& reduce) {
  const std::size_t c = a.channels();
  const auto ci = static_cast<Eigen::Index>(c);
  const BevSpec& spec = a.spec;
  Tensor q({spec.cells_x, spec.cells_y, c});
  const auto wa = reduce.weight.leftCols(ci);
  const auto wb = reduce.weight.rightCols(ci);
  for (std::size_t i = 0; i < spec.cells_x; ++i) {
    for (std::size_t j = 0; j < spec.cells_y; ++j) {
      Eigen::Map<Eigen::VectorXd>(q.data().data() + (i * spec.cells_y + j) * c, ci) =
          wa * a.cell(i, j) + wb * b.cell(i, j) + reduce.bias;
    }
  }
  return q;
}

void check_step_inputs(const BevFeature& f_prev, const BevFeature& f_curr, const TdaParams& p) {
  require_compatible(f_prev, f_curr, "tda_step");
  p.validate();
  if (f_curr.channels() != p.channels()) {
    throw ShapeError("tda_step: feature channels " + std::to_string(f_curr.channels()) +
                     " differ from parameter channels " + std::to_string(p.channels()));
  }
}

struct Trace {
  std::vector<BevFeature> calibrated;  // calibrated[t] feeds step t (index 0 unused)
  std::vector<Eigen::Matrix3d> motions;
  std::vector<BevFeature> running;
};

Trace run_forward(const FrameSequence& seq, const TdaParams& params) {
  seq.validate();
  Trace tr;
  const std::size_t n = seq.length();
  tr.calibrated.resize(n);
  tr.motions.resize(n, Eigen::Matrix3d::Identity());
  tr.running.reserve(n);
  tr.running.push_back(seq.frames[0]);
  for (std::size_t t = 1; t < n; ++t) {
    tr.motions[t] = ego_motion_matrix(seq.poses[t - 1], seq.poses[t]);
    tr.calibrated[t] = warp_bev(tr.running.back(), tr.motions[t]);
    tr.running.push_back(tda_step(tr.calibrated[t], seq.frames[t], params));
  }
  return tr;
}

}  // namespace

void TdaParams::validate() const {
  attn_prev.validate();
  const auto c = static_cast<Eigen::Index>(channels());
  query_reduce.validate();
  if (query_reduce.in_dim() != 2 * c || query_reduce.out_dim() != c) {
    throw ShapeError("tda: query_reduce must map 2C -> C");
  }
  if (!share_attention) {
    attn_curr.validate();
    if (attn_curr.channels() != channels()) throw ShapeError("tda: attention channel mismatch");
  }
}

TdaParams TdaParams::random(std::size_t channels, std::size_t heads, std::size_t points,
                            Rng& rng, bool share_attention) {
  const auto c = static_cast<Eigen::Index>(channels);
  TdaParams p;
  p.query_reduce = LinearParams::random(2 * c, c, rng);
  p.attn_prev = DeformAttnParams::random(channels, heads, points, rng);
  p.attn_curr = share_attention ? p.attn_prev : DeformAttnParams::random(channels, heads, points, rng);
  p.share_attention = share_attention;
  return p;
}

TdaParams TdaParams::identity_attention(std::size_t channels, std::size_t heads,
                                        std::size_t points, Rng& rng) {
  const auto c = static_cast<Eigen::Index>(channels);
  TdaParams p;
  p.query_reduce = LinearParams::random(2 * c, c, rng);
  p.attn_prev = DeformAttnParams::identity(channels, heads, points);
  p.attn_curr = DeformAttnParams::identity(channels, heads, points);
  return p;
}

TdaParamGrads TdaParamGrads::zeros_like(const TdaParams& p) {
  return {LinearGrads::zeros_like(p.query_reduce), DeformAttnParamGrads::zeros_like(p.attn_prev),
          DeformAttnParamGrads::zeros_like(p.attn_curr)};
}

TdaParamGrads& TdaParamGrads::operator+=(const TdaParamGrads& o) {
  query_reduce += o.query_reduce;
  attn_prev += o.attn_prev;
  attn_curr += o.attn_curr;
  return *this;
}

Eigen::VectorXd flatten(const TdaParams& params) {
  Eigen::Index n = 0;
  visit(params, [&](const LinearParams& l) { n += linear_size(l); });
  Eigen::VectorXd out(n);
  Eigen::Index at = 0;
  visit(params, [&](const LinearParams& l) { write_linear(l, out, at); });
  return out;
}

TdaParams unflatten(const TdaParams& layout, const Eigen::VectorXd& flat) {
  TdaParams p = layout;
  Eigen::Index at = 0;
  visit(p, [&](LinearParams& l) {
    if (at + linear_size(l) > flat.size()) throw ShapeError("unflatten: vector too short");
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[at++];
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = flat[at++];
  });
  if (at != flat.size()) throw ShapeError("unflatten: vector length does not match layout");
  if (p.share_attention) p.attn_curr = p.attn_prev;
  return p;
}

Eigen::VectorXd flatten(const TdaParamGrads& grads, bool share_attention) {
  TdaParamGrads g = grads;
  if (share_attention) g.attn_prev += g.attn_curr;
  Eigen::Index n = 0;
  visit(g, share_attention, [&](const LinearGrads& l) { n += linear_size(l); });
  Eigen::VectorXd out(n);
  Eigen::Index at = 0;
  visit(g, share_attention, [&](const LinearGrads& l) { write_linear(l, out, at); });
  return out;
}

void FrameSequence::validate() const {
  if (frames.empty()) throw ShapeError("frame sequence: at least one frame is required");
  if (frames.size() != poses.size()) {
    throw ShapeError("frame sequence: " + std::to_string(frames.size()) + " frames but " +
                     std::to_string(poses.size()) + " poses");
  }
  for (const auto& f : frames) require_compatible(frames.front(), f, "frame sequence");
}

BevFeature calibrate_step(const BevFeature& f_prev, const EgoPose& pose_prev,
                          const EgoPose& pose_curr) {
  return warp_bev(f_prev, ego_motion_matrix(pose_prev, pose_curr));
}

Tensor self_reference_points(const BevSpec& spec) { return reference_grid(spec); }

BevFeature tda_step(const BevFeature& f_prev_update, const BevFeature& f_curr,
                    const TdaParams& params) {
  check_step_inputs(f_prev_update, f_curr, params);
  const Tensor q = reduce_concat(f_prev_update, f_curr, params.query_reduce);
  const Tensor refs = reference_grid(f_curr.spec);
  const Tensor att_prev =
      deform_attn_grid(q, refs, to_channel_major(f_prev_update), params.attn_prev);
  const Tensor att_curr =
      deform_attn_grid(q, refs, to_channel_major(f_curr), params.current_attention());
  BevFeature out = f_curr;
  out.data.flat() += 0.5 * (att_prev.flat() + att_curr.flat());
  return out;
}

TdaStepGrads tda_step_backward(const BevFeature& f_prev_update, const BevFeature& f_curr,
                               const TdaParams& params, const BevFeature& grad_out) {
  check_step_inputs(f_prev_update, f_curr, params);
  require_compatible(f_curr, grad_out, "tda_step_backward");
  const BevSpec& spec = f_curr.spec;
  const std::size_t c = f_curr.channels();
  const auto ci = static_cast<Eigen::Index>(c);

  const Tensor q = reduce_concat(f_prev_update, f_curr, params.query_reduce);
  const Tensor refs = reference_grid(spec);
  Tensor half_grad = grad_out.data;
  half_grad.flat() *= 0.5;

  const auto back_prev = deform_attn_grid_backward(q, refs, to_channel_major(f_prev_update),
                                                   params.attn_prev, half_grad);
  const auto back_curr = deform_attn_grid_backward(q, refs, to_channel_major(f_curr),
                                                   params.current_attention(), half_grad);

  TdaStepGrads g{from_channel_major(spec, back_prev.value_map),
                 from_channel_major(spec, back_curr.value_map), TdaParamGrads::zeros_like(params)};
  g.f_curr.data.flat() += grad_out.data.flat();
  g.params.attn_prev = back_prev.params;
  g.params.attn_curr = back_curr.params;

  const auto wa = params.query_reduce.weight.leftCols(ci);
  const auto wb = params.query_reduce.weight.rightCols(ci);
  Eigen::MatrixXd& gw = g.params.query_reduce.weight;
  for (std::size_t i = 0; i < spec.cells_x; ++i) {
    for (std::size_t j = 0; j < spec.cells_y; ++j) {
      const std::size_t at = (i * spec.cells_y + j) * c;
      const Eigen::VectorXd gq =
          Eigen::Map<const Eigen::VectorXd>(back_prev.queries.data().data() + at, ci) +
          Eigen::Map<const Eigen::VectorXd>(back_curr.queries.data().data() + at, ci);
      if (gq.isZero(0.0)) continue;
      gw.leftCols(ci).noalias() += gq * f_prev_update.cell(i, j).transpose();
      gw.rightCols(ci).noalias() += gq * f_curr.cell(i, j).transpose();
      g.params.query_reduce.bias += gq;
      g.f_prev_update.cell(i, j) += wa.transpose() * gq;
      g.f_curr.cell(i, j) += wb.transpose() * gq;
    }
  }
  return g;
}

BevFeature temporal_fuse(const FrameSequence& seq, const TdaParams& params) {
  seq.validate();
  BevFeature running = seq.frames[0];
  for (std::size_t t = 1; t < seq.length(); ++t) {
    running = tda_step(calibrate_step(running, seq.poses[t - 1], seq.poses[t]), seq.frames[t],
                       params);
  }
  return running;
}

namespace {

TemporalFuseGrads backward_from_trace(const Trace& tr, const FrameSequence& seq,
                                      const TdaParams& params, const BevFeature& grad_out) {
  require_compatible(tr.running.back(), grad_out, "temporal_fuse_backward");
  const std::size_t n = seq.length();
  TemporalFuseGrads g{std::vector<BevFeature>(n), TdaParamGrads::zeros_like(params)};
  BevFeature grad_running = grad_out;
  for (std::size_t t = n - 1; t >= 1; --t) {
    TdaStepGrads step = tda_step_backward(tr.calibrated[t], seq.frames[t], params, grad_running);
    g.frames[t] = std::move(step.f_curr);
    g.params += step.params;
    grad_running = warp_bev_backward(step.f_prev_update, tr.motions[t]);
  }
  g.frames[0] = std::move(grad_running);
  return g;
}

}  // namespace

TemporalFuseGrads temporal_fuse_backward(const FrameSequence& seq, const TdaParams& params,
                                         const BevFeature& grad_out) {
  return backward_from_trace(run_forward(seq, params), seq, params, grad_out);
}

BevFeature naive_fuse(const FrameSequence& seq, const ConvParams& conv) {
  seq.validate();
  const std::size_t n = seq.length();
  const std::size_t c = seq.frames.front().channels();
  if (conv.in_channels() != n * c || conv.out_channels() != c) {
    throw ShapeError("naive_fuse: convolution must map T*C = " + std::to_string(n * c) +
                     " -> C = " + std::to_string(c) + " channels");
  }
  Tensor stacked;
  for (std::size_t s = 0; s < n; ++s) {
    BevFeature f = seq.frames[s];
    for (std::size_t t = s + 1; t < n; ++t) f = calibrate_step(f, seq.poses[t - 1], seq.poses[t]);
    Tensor chw = to_channel_major(f);
    stacked = s == 0 ? std::move(chw) : concat_channels(stacked, chw);
  }
  return from_channel_major(seq.frames.front().spec, conv2d(stacked, conv));
}

ConvParams averaging_temporal_conv(std::size_t channels, std::size_t frames) {
  ConvParams conv = ConvParams::zeros(channels * frames, channels);
  const double w = 1.0 / static_cast<double>(frames);
  for (std::size_t s = 0; s < frames; ++s) {
    const ConvParams block = ConvParams::block_delta(channels * frames, channels, s * channels, w);
    for (std::size_t k = 0; k < conv.kernel.size(); ++k) conv.kernel[k] += block.kernel[k];
  }
  return conv;
}

double tda_loss(std::span<const TrainingSample> samples, const TdaParams& params) {
  if (samples.empty()) throw ShapeError("tda_loss: no training samples");
  double total = 0.0;
  for (const auto& s : samples) {
    const BevFeature out = temporal_fuse(s.sequence, params);
    require_compatible(out, s.target, "tda_loss");
    total += (out.data.flat() - s.target.data.flat()).squaredNorm() /
             static_cast<double>(out.data.size());
  }
  return total / static_cast<double>(samples.size());
}

TdaParamGrads tda_loss_gradient(std::span<const TrainingSample> samples, const TdaParams& params) {
  if (samples.empty()) throw ShapeError("tda_loss_gradient: no training samples");
  TdaParamGrads total = TdaParamGrads::zeros_like(params);
  for (const auto& s : samples) {
    const Trace tr = run_forward(s.sequence, params);
    BevFeature grad = tr.running.back();
    require_compatible(grad, s.target, "tda_loss_gradient");
    const double scale =
        2.0 / (static_cast<double>(grad.data.size()) * static_cast<double>(samples.size()));
    grad.data.flat() = scale * (grad.data.flat() - s.target.data.flat());
    total += backward_from_trace(tr, s.sequence, params, grad).params;
  }
  return total;
}

TdaTrainResult train_tda_offsets(std::span<const TrainingSample> samples, TdaParams params,
                                 std::size_t steps, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("train_tda_offsets: lr must be positive");
  TdaTrainResult result{std::move(params), {}, 0.0};
  if (steps == 0) {
    result.final_loss = samples.empty() ? 0.0 : tda_loss(samples, result.params);
    return result;
  }
  result.loss_history.reserve(steps);
  for (std::size_t step = 0; step < steps; ++step) {
    const double loss = tda_loss(samples, result.params);
    if (!std::isfinite(loss)) {
      throw NumericError("train_tda_offsets: non-finite loss at step " + std::to_string(step));
    }
    result.loss_history.push_back(loss);
    const Eigen::VectorXd grad =
        flatten(tda_loss_gradient(samples, result.params), result.params.share_attention);
    if (!grad.allFinite()) {
      throw NumericError("train_tda_offsets: non-finite gradient at step " + std::to_string(step));
    }
    result.params = unflatten(result.params, flatten(result.params) - lr * grad);
  }
  result.final_loss = tda_loss(samples, result.params);
  if (!std::isfinite(result.final_loss)) {
    throw NumericError("train_tda_offsets: non-finite loss after the final step");
  }
  return result;
}

}  // namespace bevfuse
