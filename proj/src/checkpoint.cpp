// Copyright 2026 The trajplan Authors
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


#include "trajplan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

namespace trajplan::harness
{

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint payload assumes little-endian");

void save_checkpoint(const Model & model, const std::string & path)
{
  json tensors = json::array();
  std::size_t offset = 0;
  for (const auto & [name, p] : model.parameters().entries()) {
    tensors.push_back({{"name", name}, {"shape", p.shape()}, {"offset", offset}});
    offset += p.numel();
  }
  const json manifest{{"format", kCheckpointFormat},
                      {"version", kCheckpointVersion},
                      {"config", json::parse(to_json(model.config()))},
                      {"intention_points", json::parse(commands::to_json(model.intention_points()))},
                      {"tensors", tensors},
                      {"doubles", offset}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path + "'");
  out << manifest.dump() << '\n';
  for (const auto & [name, p] : model.parameters().entries()) {
    const auto v = p.values();
    out.write(reinterpret_cast<const char *>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (!out) throw CheckpointError("write failed for checkpoint '" + path + "'");
}

std::string incompatibility(const Config & stored, const Config & expected)
{
  const json a = json::parse(to_json(stored)), b = json::parse(to_json(expected));
  for (const auto & [key, value] : a["model"].items()) {
    if (key == "seed") continue;
    if (b["model"][key] != value) return "model." + key;
  }
  for (const char * key : {"history_steps", "future_steps", "dt"}) {
    if (a["data"][key] != b["data"][key]) return std::string("data.") + key;
  }
  return {};
}

namespace
{

std::unique_ptr<Model> load(const std::string & path, const Config * expected)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw CheckpointError(path + ": empty checkpoint");
  json m;
  try {
    m = json::parse(line);
  } catch (const json::exception & e) {
    throw CheckpointError(path + ": manifest is not JSON (" + e.what() + ")");
  }
  if (!m.is_object() || m.value("format", "") != kCheckpointFormat) {
    throw CheckpointError(path + ": not a trajplan checkpoint");
  }
  if (m.value("version", -1) != kCheckpointVersion) {
    throw CheckpointError(path + ": unsupported checkpoint version " + m["version"].dump());
  }
  Config cfg;
  commands::IntentionPointSet points;
  try {
    cfg = config_from_json(m.at("config").dump());
    points = commands::intention_points_from_json(m.at("intention_points").dump());
  } catch (const std::exception & e) {
    throw CheckpointError(path + ": bad manifest (" + e.what() + ")");
  }
  if (expected) {
    const std::string key = incompatibility(cfg, *expected);
    if (!key.empty()) throw CheckpointError(path + ": incompatible with config at " + key);
  }
  auto model = std::make_unique<Model>(cfg, std::move(points));

  const auto & entries = model->parameters().entries();
  const json & table = m.at("tensors");
  if (!table.is_array() || table.size() != entries.size()) {
    throw CheckpointError(path + ": manifest lists " + std::to_string(table.size()) +
                          " tensors, architecture has " + std::to_string(entries.size()));
  }
  std::size_t offset = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto & [name, p] = entries[i];
    const json & row = table[i];
    if (row.value("name", "") != name) {
      throw CheckpointError(path + ": tensor " + std::to_string(i) + " is '" + row.value("name", "") +
                            "', expected '" + name + "'");
    }
    if (row.at("shape").get<tensor::Shape>() != p.shape()) {
      throw CheckpointError(path + ": tensor '" + name + "' has shape " + row.at("shape").dump() +
                            ", expected " + tensor::to_string(p.shape()));
    }
    if (row.at("offset").get<std::size_t>() != offset) {
      throw CheckpointError(path + ": tensor '" + name + "' has a bad offset");
    }
    offset += p.numel();
  }
  if (m.value("doubles", std::size_t{0}) != offset) {
    throw CheckpointError(path + ": manifest double count does not match the tensor table");
  }
  for (const auto & [name, p] : entries) {
    auto dst = tensor::Tensor(p).mutable_values();
    in.read(reinterpret_cast<char *>(dst.data()), static_cast<std::streamsize>(dst.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(dst.size() * sizeof(double))) {
      throw CheckpointError(path + ": payload truncated in tensor '" + name + "'");
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError(path + ": trailing bytes after payload");
  return model;
}

}  // namespace

std::unique_ptr<Model> load_checkpoint(const std::string & path) { return load(path, nullptr); }

std::unique_ptr<Model> load_checkpoint(const std::string & path, const Config & expected)
{
  return load(path, &expected);
}

}  // namespace trajplan::harness
