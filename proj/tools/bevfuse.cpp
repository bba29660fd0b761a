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

// Command-line entry point: demo, verify and train-tda subcommands.

#include <iostream>

#include <CLI11.hpp>

#include "bevfuse/app.hpp"

int main(int argc, char** argv) {
  CLI::App app{"bevfuse: BEV spatial and temporal fusion on synthetic scenes"};
  app.require_subcommand(1);

  bevfuse::RunConfig config;
  std::size_t heights = 0;
  std::string suite = "all";
  std::size_t steps = 500;
  double lr = 1e-2;

  auto add_model_flags = [&](CLI::App* cmd) {
    cmd->add_option("--frames", config.frames, "Frames fused over time")
        ->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--heads", config.heads, "Attention heads")
        ->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--points", config.points, "Sampling points per head")
        ->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--seed", config.seed, "Parameter seed")->capture_default_str();
    cmd->add_option("--out", config.output_dir, "Output directory")->capture_default_str();
  };

  auto* demo = app.add_subcommand("demo", "Run the full pipeline on a scene file");
  demo->add_option("--scene", config.scene_path, "Scene JSON file")->required();
  demo->add_option("--layers", config.layers, "View-transformer layers")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  demo->add_option("--heights", heights, "Pillar heights (resampled over the scene's range)")
      ->check(CLI::PositiveNumber);
  add_model_flags(demo);

  auto* verify = app.add_subcommand("verify", "Run verification suites");
  verify->add_option("suite", suite, "oracles, gradients, geometry, properties or all")
      ->capture_default_str();

  auto* train = app.add_subcommand("train-tda", "Train temporal attention on moving blobs");
  train->add_option("--steps", steps, "Gradient steps")->capture_default_str();
  train->add_option("--lr", lr, "Learning rate")->capture_default_str();
  add_model_flags(train);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // CLI11 reports --help as success; everything else is a usage error.
    return app.exit(e) == 0 ? 0 : bevfuse::kExitUsage;
  }
  if (heights != 0) config.heights = heights;

  try {
    if (*demo) return bevfuse::run_demo(config, std::cerr);
    if (*verify) return bevfuse::run_verify(suite, std::cout, std::cerr);
    if (*train) return bevfuse::run_train_tda(config, steps, lr, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bevfuse::kExitFailed;
  }
  return bevfuse::kExitUsage;
}
