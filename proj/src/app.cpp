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

#include "bevfuse/app.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "bevfuse/errors.hpp"
#include "bevfuse/lgvt.hpp"
#include "bevfuse/pgm.hpp"
#include "bevfuse/scene_io.hpp"
#include "bevfuse/spatial_fusion.hpp"
#include "bevfuse/tda.hpp"
#include "bevfuse/verify.hpp"

namespace bevfuse {
namespace {

using nlohmann::ordered_json;

// Moving-blob family used by the training experiment.
constexpr std::size_t kTrainCells = 32;
constexpr std::size_t kTrainScenes = 4;
constexpr double kTrainSpeedCells = 3.0;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void require_finite(const BevFeature& f, const char* stage) {
  if (!f.data.all_finite()) throw NumericError(std::string(stage) + " output is not finite");
}

// null when the truth has no peak to compare against.
ordered_json peak_error_or_null(const BevFeature& f, const BevFeature& truth) {
  try {
    return peak_displacement_error(f, truth);
  } catch (const std::domain_error&) {
    return nullptr;
  }
}

double mean_peak_error(std::span<const TrainingSample> samples,
                       const std::function<BevFeature(const FrameSequence&)>& fuse) {
  double total = 0.0;
  for (const auto& s : samples) total += peak_displacement_error(fuse(s.sequence), s.target);
  return total / static_cast<double>(samples.size());
}

}  // namespace

std::vector<double> pillar_heights(std::size_t count, double lo, double hi) {
  if (count == 0) throw std::invalid_argument("pillar_heights: count must be positive");
  if (count == 1) return {0.5 * (lo + hi)};
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  return out;
}

PipelineStages run_pipeline(const Scene& input, const RunConfig& config) {
  Scene scene = input;
  if (config.heights) {
    const auto [lo, hi] = std::minmax_element(scene.spec.heights.begin(), scene.spec.heights.end());
    scene.spec.heights = pillar_heights(*config.heights, *lo, *hi);
  }
  scene.validate();
  if (config.frames == 0 || config.frames > scene.frames()) {
    throw ShapeError("run_pipeline: requested " + std::to_string(config.frames) +
                     " frames but the scene has " + std::to_string(scene.frames()));
  }
  const std::size_t c = scene.channels;
  if (c % config.heads != 0) {
    throw ShapeError("run_pipeline: " + std::to_string(config.heads) + " heads do not divide " +
                     std::to_string(c) + " channels");
  }

  Rng rng(config.seed);
  const LgvtParams lgvt = LgvtParams::identity_attention(c, config.layers, config.heads, config.points, rng);
  const TdaParams tda = TdaParams::identity_attention(c, config.heads, config.points, rng);
  const ConvParams fusion = averaging_fusion_conv(c);

  PipelineStages out;
  FrameSequence seq;
  const std::size_t first = scene.frames() - config.frames;
  for (std::size_t t = first; t < scene.frames(); ++t) {
    out.lidar = render_lidar_bev(scene, t);
    out.camera = lgvt_forward(out.lidar, render_image_features(scene, t), scene.spec, lgvt);
    out.fused = fuse_spatial(out.lidar, out.camera, fusion);
    require_finite(out.camera, "view transformer");
    require_finite(out.fused, "spatial fusion");
    seq.frames.push_back(out.fused);
    seq.poses.push_back(scene.ego[t]);
  }
  out.temporal = temporal_fuse(seq, tda);
  require_finite(out.temporal, "temporal fusion");
  out.truth = ground_truth_bev(scene, scene.frames() - 1);
  return out;
}

int run_demo(const RunConfig& config, std::ostream& err) {
  Scene scene;
  try {
    scene = load_scene(config.scene_path);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  PipelineStages stages;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    stages = run_pipeline(scene, config);
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::filesystem::create_directories(config.output_dir);
  ordered_json metrics;
  metrics["peak_error"] = peak_error_or_null(stages.temporal, stages.truth);
  ordered_json stage_errors, ranges;
  const std::pair<const char*, const BevFeature*> maps[] = {
      {"b_lidar", &stages.lidar}, {"b_camera", &stages.camera},
      {"fused", &stages.fused}, {"temporal", &stages.temporal}};
  for (const auto& [name, feature] : maps) {
    const PgmImage img = encode_magnitude(*feature);
    write_pgm(img, config.output_dir / (std::string(name) + ".pgm"));
    stage_errors[name] = peak_error_or_null(*feature, stages.truth);
    ranges[name] = {{"min", img.min}, {"max", img.max}};
  }
  metrics["stage_peak_errors"] = stage_errors;
  metrics["magnitude_ranges"] = ranges;
  metrics["config"] = {{"layers", config.layers},
                       {"heights", stages.truth.spec.heights},
                       {"frames", config.frames},
                       {"heads", config.heads},
                       {"points", config.points},
                       {"seed", config.seed}};
  write_text(config.output_dir / "metrics.json", metrics.dump(2) + "\n");

  if (metrics["peak_error"].is_null()) {
    err << "warning: ground truth is all zero, peak error undefined\n";
  }
  err << "demo finished in " << std::fixed << std::setprecision(2) << seconds << " s\n";
  return kExitOk;
}

int run_verify(const std::string& suite, std::ostream& out, std::ostream& err) {
  std::vector<std::string> names;
  if (suite == "all") {
    names = suite_names();
  } else if (std::find(suite_names().begin(), suite_names().end(), suite) != suite_names().end()) {
    names = {suite};
  } else {
    err << "error: unknown suite '" << suite << "' (expected all";
    for (const auto& n : suite_names()) err << ", " << n;
    err << ")\n";
    return kExitUsage;
  }
  bool ok = true;
  for (const auto& name : names) {
    const SuiteReport report = run_suite(name);
    for (const auto& c : report.checks) {
      out << (c.passed ? "PASS" : "FAIL") << "  " << name << ": " << c.name << " (" << c.detail << ")\n";
    }
    err << name << " suite took " << std::fixed << std::setprecision(2) << report.seconds << " s\n";
    ok = ok && report.passed();
  }
  return ok ? kExitOk : kExitFailed;
}

int run_train_tda(const RunConfig& config, std::size_t steps, double lr, std::ostream& err) {
  if (steps == 0 || !(lr > 0.0)) {
    err << "error: train-tda needs steps >= 1 and lr > 0\n";
    return kExitUsage;
  }
  const BevSpec spec = default_spec(kTrainCells);
  const std::vector<TrainingSample> family =
      moving_blob_family(config.seed, kTrainScenes, spec, kTrainSpeedCells, config.frames);
  const std::size_t c = family.front().sequence.frames.front().channels();
  if (c % config.heads != 0) {
    err << "error: " << config.heads << " heads do not divide " << c << " channels\n";
    return kExitUsage;
  }
  Rng rng(config.seed);
  const TdaParams init = TdaParams::random(c, config.heads, config.points, rng);

  TdaTrainResult result;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    result = train_tda_offsets(family, init, steps, lr);
  } catch (const NumericError& e) {
    err << "error: training diverged: " << e.what() << '\n';
    return kExitDivergence;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const ConvParams averaging = averaging_temporal_conv(c, config.frames);
  const double naive = mean_peak_error(family, [&](const FrameSequence& s) { return naive_fuse(s, averaging); });
  const double tda = mean_peak_error(family, [&](const FrameSequence& s) { return temporal_fuse(s, result.params); });

  ordered_json report;
  report["steps"] = steps;
  report["lr"] = lr;
  report["seed"] = config.seed;
  report["scenes"] = family.size();
  report["frames"] = config.frames;
  report["speed_cells_per_frame"] = kTrainSpeedCells;
  report["initial_loss"] = result.loss_history.front();
  report["final_loss"] = result.final_loss;
  report["naive_peak_error"] = naive;
  report["tda_peak_error"] = tda;
  report["loss_history"] = result.loss_history;
  std::filesystem::create_directories(config.output_dir);
  write_text(config.output_dir / "tda_report.json", report.dump(2) + "\n");

  err << "train-tda: loss " << result.loss_history.front() << " -> " << result.final_loss
      << ", peak error tda " << tda << " vs naive " << naive << " (" << std::fixed
      << std::setprecision(1) << seconds << " s)\n";
  return tda < naive ? kExitOk : kExitFailed;
}

}  // namespace bevfuse
