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

#include <filesystem>
#include <string>

#include "bevfuse/synthetic.hpp"

namespace bevfuse {

/// Scene documents: top-level keys `seed`, `spec`, `image_size`, `cameras`,
/// `ego`, `boxes`. Unknown keys at any level are rejected with ParseError.
Scene parse_scene(const std::string& json_text);
Scene load_scene(const std::filesystem::path& path);

std::string scene_to_json(const Scene& scene);
void save_scene(const Scene& scene, const std::filesystem::path& path);

}  // namespace bevfuse
