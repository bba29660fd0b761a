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

#include "bevfuse/scene_io.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "bevfuse/errors.hpp"

namespace bevfuse {
namespace {

using nlohmann::json;

void require_keys(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw ParseError(where + ": unknown key '" + key + "'");
  }
  for (const char* k : keys) {
    if (!obj.contains(k)) throw ParseError(where + ": missing key '" + std::string(k) + "'");
  }
}

double real(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(where + ": expected a number");
  return v.get<double>();
}

std::vector<double> reals(const json& v, const std::string& where, std::size_t expected = 0) {
  if (!v.is_array()) throw ParseError(where + ": expected an array");
  if (expected != 0 && v.size() != expected) {
    throw ParseError(where + ": expected " + std::to_string(expected) + " entries");
  }
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(real(v[k], where));
  return out;
}

std::size_t count(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() <= 0) {
    throw ParseError(where + ": expected a positive integer");
  }
  return v.get<std::size_t>();
}

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

}  // namespace

Scene parse_scene(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scene: malformed JSON: ") + e.what());
  }
  require_keys(doc, {"seed", "spec", "image_size", "cameras", "ego", "boxes"}, "scene");

  Scene s;
  if (!doc["seed"].is_number_integer() || doc["seed"].get<long long>() < 0) {
    throw ParseError("scene.seed: expected a non-negative integer");
  }
  s.seed = doc["seed"].get<std::uint64_t>();

  const json& spec = doc["spec"];
  require_keys(spec, {"cells_x", "cells_y", "cell_size", "origin", "heights"}, "scene.spec");
  s.spec.cells_x = count(spec["cells_x"], "scene.spec.cells_x");
  s.spec.cells_y = count(spec["cells_y"], "scene.spec.cells_y");
  s.spec.cell_size = real(spec["cell_size"], "scene.spec.cell_size");
  const auto origin = reals(spec["origin"], "scene.spec.origin", 2);
  s.spec.origin = {origin[0], origin[1]};
  s.spec.heights = reals(spec["heights"], "scene.spec.heights");

  const auto image = doc["image_size"];
  if (!image.is_array() || image.size() != 2) throw ParseError("scene.image_size: expected [H, W]");
  s.image_height = count(image[0], "scene.image_size[0]");
  s.image_width = count(image[1], "scene.image_size[1]");

  if (!doc["cameras"].is_array()) throw ParseError("scene.cameras: expected an array");
  for (std::size_t k = 0; k < doc["cameras"].size(); ++k) {
    const std::string where = "scene.cameras[" + std::to_string(k) + "]";
    const json& c = doc["cameras"][k];
    require_keys(c, {"fx", "fy", "cx", "cy", "extrinsic"}, where);
    const auto e = reals(c["extrinsic"], where + ".extrinsic", 16);
    Eigen::Matrix4d ext;
    for (int r = 0; r < 4; ++r)
      for (int col = 0; col < 4; ++col) ext(r, col) = e[static_cast<std::size_t>(r * 4 + col)];
    s.rig.push_back(CameraModel::make(real(c["fx"], where), real(c["fy"], where),
                                      real(c["cx"], where), real(c["cy"], where), ext,
                                      s.image_width, s.image_height));
  }

  if (!doc["ego"].is_array()) throw ParseError("scene.ego: expected an array");
  for (std::size_t k = 0; k < doc["ego"].size(); ++k) {
    const std::string where = "scene.ego[" + std::to_string(k) + "]";
    const json& p = doc["ego"][k];
    require_keys(p, {"x", "y", "yaw"}, where);
    s.ego.emplace_back(real(p["x"], where), real(p["y"], where), real(p["yaw"], where));
  }

  if (!doc["boxes"].is_array()) throw ParseError("scene.boxes: expected an array");
  for (std::size_t k = 0; k < doc["boxes"].size(); ++k) {
    const std::string where = "scene.boxes[" + std::to_string(k) + "]";
    const json& b = doc["boxes"][k];
    require_keys(b, {"center", "half_extent", "velocity", "signature"}, where);
    Box box;
    const auto c = reals(b["center"], where + ".center", 3);
    const auto h = reals(b["half_extent"], where + ".half_extent", 2);
    const auto v = reals(b["velocity"], where + ".velocity", 2);
    const auto sig = reals(b["signature"], where + ".signature");
    if (sig.empty()) throw ParseError(where + ".signature: must not be empty");
    box.center = {c[0], c[1], c[2]};
    box.half_extent = {h[0], h[1]};
    box.velocity = {v[0], v[1]};
    box.signature = Eigen::Map<const Eigen::VectorXd>(sig.data(), static_cast<Eigen::Index>(sig.size()));
    s.boxes.push_back(std::move(box));
  }
  if (!s.boxes.empty()) s.channels = static_cast<std::size_t>(s.boxes.front().signature.size());

  try {
    s.validate();
  } catch (const ShapeError& e) {
    throw ParseError(e.what());
  }
  return s;
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scene file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scene(buf.str());
}

std::string scene_to_json(const Scene& scene) {
  json doc;
  doc["seed"] = scene.seed;
  doc["spec"] = {{"cells_x", scene.spec.cells_x},
                 {"cells_y", scene.spec.cells_y},
                 {"cell_size", scene.spec.cell_size},
                 {"origin", {scene.spec.origin.x(), scene.spec.origin.y()}},
                 {"heights", scene.spec.heights}};
  doc["image_size"] = {scene.image_height, scene.image_width};
  doc["cameras"] = json::array();
  for (const auto& cam : scene.rig) {
    json e = json::array();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) e.push_back(cam.extrinsics(r, c));
    doc["cameras"].push_back(
        {{"fx", cam.fx()}, {"fy", cam.fy()}, {"cx", cam.cx()}, {"cy", cam.cy()}, {"extrinsic", e}});
  }
  doc["ego"] = json::array();
  for (const auto& p : scene.ego) doc["ego"].push_back({{"x", p.x}, {"y", p.y}, {"yaw", p.yaw}});
  doc["boxes"] = json::array();
  for (const auto& b : scene.boxes) {
    doc["boxes"].push_back({{"center", vec(b.center)},
                            {"half_extent", vec(b.half_extent)},
                            {"velocity", vec(b.velocity)},
                            {"signature", vec(b.signature)}});
  }
  return doc.dump(2) + "\n";
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scene file " + path.string());
  out << scene_to_json(scene);
}

}  // namespace bevfuse
