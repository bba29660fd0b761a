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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bevfuse/app.hpp"
#include "bevfuse/errors.hpp"
#include "bevfuse/pgm.hpp"
#include "bevfuse/scene_io.hpp"
#include "bevfuse/verify.hpp"

namespace bevfuse {
namespace {

namespace fs = std::filesystem;

const fs::path kData = BEVFUSE_DATA_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bevfuse_test_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST(PillarHeights, EvenSpacing) {
  EXPECT_EQ(pillar_heights(1, 0.0, 1.5), std::vector<double>{0.75});
  EXPECT_EQ(pillar_heights(4, 0.0, 1.5), (std::vector<double>{0.0, 0.5, 1.0, 1.5}));
  EXPECT_THROW(pillar_heights(0, 0.0, 1.0), std::invalid_argument);
}

TEST(RunConfig, Defaults) {
  const RunConfig c;
  EXPECT_EQ(c.layers, 3u);
  EXPECT_EQ(c.frames, 5u);
  EXPECT_EQ(c.heads, 4u);
  EXPECT_EQ(c.points, 4u);
  EXPECT_EQ(default_spec().heights.size(), 4u);
}

TEST(RunPipeline, ShapesAndErrors) {
  const Scene scene = load_scene(kData / "static_scene.json");
  RunConfig c;
  c.layers = 1;
  c.frames = 2;
  c.heights = 2;
  const PipelineStages s = run_pipeline(scene, c);
  for (const BevFeature* f : {&s.lidar, &s.camera, &s.fused, &s.temporal}) {
    EXPECT_EQ(f->data.shape(), (std::vector<std::size_t>{64, 64, scene.channels}));
    EXPECT_TRUE(f->data.all_finite());
  }
  EXPECT_EQ(s.truth.spec.heights.size(), 2u);
  c.frames = 6;
  EXPECT_THROW(run_pipeline(scene, c), ShapeError);
  c.frames = 1;
  c.heads = 3;
  EXPECT_THROW(run_pipeline(scene, c), ShapeError);
}

TEST(Demo, StaticSceneLocalises) {
  RunConfig c;
  c.scene_path = kData / "static_scene.json";
  c.output_dir = scratch("static");
  std::ostringstream err;
  ASSERT_EQ(run_demo(c, err), kExitOk) << err.str();
  for (const char* name : {"b_lidar.pgm", "b_camera.pgm", "fused.pgm", "temporal.pgm", "metrics.json"})
    EXPECT_TRUE(fs::exists(c.output_dir / name)) << name;
  const auto metrics = nlohmann::json::parse(slurp(c.output_dir / "metrics.json"));
  EXPECT_LE(metrics["peak_error"].get<double>(), 1.0);
  EXPECT_EQ(read_pgm(c.output_dir / "temporal.pgm").width, 64u);
}

TEST(Demo, EmptySceneReportsUndefinedError) {
  RunConfig c;
  c.scene_path = kData / "empty_scene.json";
  c.output_dir = scratch("empty");
  std::ostringstream err;
  ASSERT_EQ(run_demo(c, err), kExitOk);
  EXPECT_NE(err.str().find("peak error undefined"), std::string::npos);
  const auto metrics = nlohmann::json::parse(slurp(c.output_dir / "metrics.json"));
  EXPECT_TRUE(metrics["peak_error"].is_null());
  for (const char* name : {"b_lidar.pgm", "b_camera.pgm", "fused.pgm", "temporal.pgm"}) {
    for (const auto p : read_pgm(c.output_dir / name).pixels) ASSERT_EQ(p, 0);
  }
}

TEST(Demo, ByteIdenticalReruns) {
  RunConfig a, b;
  a.scene_path = b.scene_path = kData / "moving_scene.json";
  a.output_dir = scratch("rerun_a");
  b.output_dir = scratch("rerun_b");
  std::ostringstream err;
  ASSERT_EQ(run_demo(a, err), kExitOk);
  ASSERT_EQ(run_demo(b, err), kExitOk);
  for (const char* name : {"b_lidar.pgm", "b_camera.pgm", "fused.pgm", "temporal.pgm", "metrics.json"})
    EXPECT_EQ(slurp(a.output_dir / name), slurp(b.output_dir / name)) << name;
}

TEST(Demo, BadInputs) {
  RunConfig c;
  c.output_dir = scratch("bad");
  std::ostringstream err;
  c.scene_path = "/nonexistent.json";
  EXPECT_EQ(run_demo(c, err), kExitUsage);
  const fs::path bad = scratch("bad_scene");
  fs::create_directories(bad);
  std::ofstream(bad / "scene.json") << "{\"seed\": 1}";
  c.scene_path = bad / "scene.json";
  EXPECT_EQ(run_demo(c, err), kExitUsage);
  c.scene_path = kData / "static_scene.json";
  c.frames = 9;
  EXPECT_EQ(run_demo(c, err), kExitUsage);
}

TEST(Demo, NonFiniteSceneIsNumericError) {
  Scene s = load_scene(kData / "static_scene.json");
  // Finite but large enough that the fused sums overflow.
  for (Box& b : s.boxes) b.signature.setConstant(1e308);
  const fs::path dir = scratch("nonfinite");
  fs::create_directories(dir);
  save_scene(s, dir / "scene.json");
  RunConfig c;
  c.scene_path = dir / "scene.json";
  c.output_dir = dir;
  std::ostringstream err;
  EXPECT_EQ(run_demo(c, err), kExitNumeric) << err.str();
}

TEST(Verify, UnknownSuite) {
  std::ostringstream out, err;
  EXPECT_EQ(run_verify("nosuch", out, err), kExitUsage);
  EXPECT_THROW(run_suite("nosuch"), std::invalid_argument);
}

TEST(Verify, GeometrySuitePasses) {
  std::ostringstream out, err;
  EXPECT_EQ(run_verify("geometry", out, err), kExitOk) << out.str();
  EXPECT_NE(out.str().find("PASS  geometry"), std::string::npos);
}

TEST(TrainTda, OneStepReport) {
  RunConfig c;
  c.output_dir = scratch("train");
  c.frames = 2;
  std::ostringstream err;
  const int code = run_train_tda(c, 1, 1e-2, err);
  EXPECT_TRUE(code == kExitOk || code == kExitFailed);
  const auto report = nlohmann::json::parse(slurp(c.output_dir / "tda_report.json"));
  for (const char* key : {"initial_loss", "final_loss", "naive_peak_error", "tda_peak_error"})
    EXPECT_TRUE(report[key].is_number()) << key;
  EXPECT_EQ(report["loss_history"].size(), 1u);
  EXPECT_EQ(run_train_tda(c, 0, 1e-2, err), kExitUsage);
  EXPECT_EQ(run_train_tda(c, 3, 1e300, err), kExitDivergence);
}

}  // namespace
}  // namespace bevfuse
