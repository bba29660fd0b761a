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

// Writes the bundled example scenes into a directory.

#include <iostream>

#include <CLI11.hpp>

#include "bevfuse/scene_io.hpp"
#include "bevfuse/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate example scene files"};
  std::filesystem::path dir = "data";
  std::uint64_t seed = 3;
  app.add_option("dir", dir, "Output directory")->capture_default_str();
  app.add_option("--seed", seed, "Scene seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  using namespace bevfuse;
  const BevSpec spec = default_spec();
  std::filesystem::create_directories(dir);
  save_scene(static_scene(seed, spec), dir / "static_scene.json");
  save_scene(moving_blob_scene(seed, spec, 3.0), dir / "moving_scene.json");
  Scene empty = static_scene(seed, spec);
  empty.boxes.clear();
  save_scene(empty, dir / "empty_scene.json");
  std::cout << "wrote 3 scenes to " << dir << '\n';
  return 0;
}
