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
#include <span>
#include <vector>

#include "bevfuse/deform_attn.hpp"
#include "bevfuse/geometry.hpp"

namespace bevfuse {

struct TdaParams {
  LinearParams query_reduce;  // 2C -> C, previous frame block first
  DeformAttnParams attn_prev;
  DeformAttnParams attn_curr;
  /// When set, attn_prev serves both attention passes and attn_curr is unused.
  bool share_attention = false;

  const DeformAttnParams& current_attention() const {
    return share_attention ? attn_prev : attn_curr;
  }
  std::size_t channels() const { return attn_prev.channels(); }
  void validate() const;

  static TdaParams random(std::size_t channels, std::size_t heads, std::size_t points, Rng& rng,
                          bool share_attention = false);
  /// Random query reduction, identity-style attention in both passes.
  static TdaParams identity_attention(std::size_t channels, std::size_t heads,
                                      std::size_t points, Rng& rng);
};

struct TdaParamGrads {
  LinearGrads query_reduce;
  DeformAttnParamGrads attn_prev;
  DeformAttnParamGrads attn_curr;

  static TdaParamGrads zeros_like(const TdaParams& p);
  TdaParamGrads& operator+=(const TdaParamGrads& o);
};

/// Flat parameter vector in a fixed field order. The shared-attention case
/// omits attn_curr.
Eigen::VectorXd flatten(const TdaParams& params);
TdaParams unflatten(const TdaParams& layout, const Eigen::VectorXd& flat);
Eigen::VectorXd flatten(const TdaParamGrads& grads, bool share_attention);

/// Fused BEV frames, oldest first, with the ego pose of each frame.
struct FrameSequence {
  std::vector<BevFeature> frames;
  std::vector<EgoPose> poses;

  std::size_t length() const { return frames.size(); }
  void validate() const;
};

/// Previous frame re-expressed in the current ego frame.
BevFeature calibrate_step(const BevFeature& f_prev, const EgoPose& pose_prev,
                          const EgoPose& pose_curr);

/// X x Y x 2 normalized coordinates of each cell's own centre.
Tensor self_reference_points(const BevSpec& spec);

/// f_curr + 0.5 * (attn_prev(q, f_prev_update) + attn_curr(q, f_curr)) with
/// q = reduce(concat(f_prev_update, f_curr)) per cell. Both inputs must
/// already live in the current ego frame.
BevFeature tda_step(const BevFeature& f_prev_update, const BevFeature& f_curr,
                    const TdaParams& params);

struct TdaStepGrads {
  BevFeature f_prev_update;
  BevFeature f_curr;
  TdaParamGrads params;
};

TdaStepGrads tda_step_backward(const BevFeature& f_prev_update, const BevFeature& f_curr,
                               const TdaParams& params, const BevFeature& grad_out);

/// Recurrent fusion: the running frame is calibrated into each next frame
/// and merged by tda_step. Output lives in the last frame's ego coordinates.
BevFeature temporal_fuse(const FrameSequence& seq, const TdaParams& params);

struct TemporalFuseGrads {
  std::vector<BevFeature> frames;
  TdaParamGrads params;
};

TemporalFuseGrads temporal_fuse_backward(const FrameSequence& seq, const TdaParams& params,
                                         const BevFeature& grad_out);

/// Every frame calibrated into the last frame by chained calibrate_step, all
/// frames channel-concatenated (oldest first) and convolved T*C -> C.
BevFeature naive_fuse(const FrameSequence& seq, const ConvParams& conv);

/// Centre-tap kernel giving the per-cell mean of the T calibrated frames.
ConvParams averaging_temporal_conv(std::size_t channels, std::size_t frames);

struct TrainingSample {
  FrameSequence sequence;
  BevFeature target;
};

/// Mean squared error of temporal_fuse against the targets, averaged over
/// elements and samples.
double tda_loss(std::span<const TrainingSample> samples, const TdaParams& params);
TdaParamGrads tda_loss_gradient(std::span<const TrainingSample> samples, const TdaParams& params);

struct TdaTrainResult {
  TdaParams params;
  /// Loss before each update.
  std::vector<double> loss_history;
  /// Loss after the last update (equals the initial loss when steps == 0).
  double final_loss = 0.0;
};

/// Plain gradient descent on tda_loss over every TdaParams field. Throws
/// NumericError if the loss becomes non-finite.
TdaTrainResult train_tda_offsets(std::span<const TrainingSample> samples, TdaParams params,
                                 std::size_t steps, double lr);

}  // namespace bevfuse
