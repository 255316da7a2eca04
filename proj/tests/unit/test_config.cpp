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


#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "trajplan/config.hpp"

namespace h = trajplan::harness;
namespace cm = trajplan::commands;
using nlohmann::json;

namespace
{

std::string read_file(const std::string & path)
{
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string with(const h::Config & c, const std::string & section, const std::string & key, json value)
{
  json j = json::parse(h::to_json(c));
  j[section][key] = std::move(value);
  return j.dump();
}

}  // namespace

TEST_CASE("presets validate and round-trip through JSON")
{
  for (const auto & c : {h::desk_preset(), h::paper_preset()}) {
    CHECK_NOTHROW(h::validate(c));
    const std::string text = h::to_json(c);
    const auto back = h::config_from_json(text);
    CHECK(h::to_json(back) == text);
  }
  CHECK(h::desk_preset().preset == "desk");
  CHECK(h::paper_preset().preset == "paper");
}

TEST_CASE("shipped config files match the presets")
{
  const std::string dir = TRAJPLAN_SOURCE_DIR "/configs/";
  CHECK(h::to_json(h::load_config(dir + "desk.json")) == h::to_json(h::desk_preset()));
  CHECK(h::to_json(h::load_config(dir + "paper.json")) == h::to_json(h::paper_preset()));
  CHECK(!read_file(dir + "desk.json").empty());
}

TEST_CASE("paper preset carries the published training settings")
{
  const auto c = h::paper_preset();
  CHECK(c.train.epochs == 35);
  CHECK(c.train.batch_size == 20);
  CHECK(c.train.learning_rate == 1e-4);
  CHECK(c.train.weight_decay == 0.01);
  CHECK(c.loss.warmup_epoch == 10);
  CHECK(c.model.num_modes == 64);
  CHECK(c.data.future_steps == 80);
  CHECK(c.data.dt == 0.1);
}

TEST_CASE("absent keys fall back to the named preset")
{
  const auto c = h::config_from_json(R"({"preset": "paper", "train": {"epochs": 36}, "masking": {}})");
  CHECK(c.train.epochs == 36);
  CHECK(c.masking.total_epochs == 36);
  CHECK(c.model.d_model == h::paper_preset().model.d_model);
  CHECK(h::to_json(h::config_from_json("{}")) == h::to_json(h::desk_preset()));
}

TEST_CASE("malformed or inconsistent configs are rejected with the key named")
{
  const auto desk = h::desk_preset();
  const auto message = [](const std::string & text) {
    try {
      h::config_from_json(text);
    } catch (const h::ConfigError & e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(R"({"model": {"d_modle": 8}})").find("model.d_modle") != std::string::npos);
  CHECK(message(R"({"extra": 1})").find("extra") != std::string::npos);
  CHECK(message(R"({"preset": "huge"})").find("huge") != std::string::npos);
  CHECK(message("{not json").find("malformed") != std::string::npos);
  CHECK(message(with(desk, "model", "d_model", "wide")).find("model.d_model") != std::string::npos);
  CHECK(message(with(desk, "loss", "warmup_epoch", desk.train.epochs)).find("loss.warmup_epoch") !=
        std::string::npos);
  CHECK(message(with(desk, "model", "d_model", 30)).find("model.d_model") != std::string::npos);
  CHECK(message(with(desk, "train", "lr_decay_factor", 0.0)).find("lr_decay_factor") != std::string::npos);
  CHECK(message(with(desk, "data", "layouts", json::array({"spiral"}))).find("spiral") != std::string::npos);
  CHECK_THROWS_AS(h::load_config("/nonexistent/config.json"), h::ConfigError);
}

TEST_CASE("learning rate schedule of the paper preset")
{
  const auto t = h::paper_preset().train;
  CHECK(h::learning_rate(t, 0) == 1e-4);
  CHECK(h::learning_rate(t, 19) == 1e-4);
  CHECK(std::abs(h::learning_rate(t, 20) - 5e-5) <= 1e-18);
  CHECK(std::abs(h::learning_rate(t, 21) - 5e-5) <= 1e-18);
  CHECK(std::abs(h::learning_rate(t, 22) - 2.5e-5) <= 1e-18);
  // Halvings at 20, 22, ..., 30, then constant.
  CHECK(std::abs(h::learning_rate(t, 30) - 1e-4 / 64) <= 1e-18);
  CHECK(h::learning_rate(t, 34) == h::learning_rate(t, 30));
  for (int e = 1; e < 35; ++e) CHECK(h::learning_rate(t, e) <= h::learning_rate(t, e - 1));
}

TEST_CASE("masking availability endpoints for both presets")
{
  for (const auto & c : {h::desk_preset(), h::paper_preset()}) {
    CHECK(cm::availability(0, c.masking) == 0.9);
    CHECK(cm::availability(c.train.epochs - 1, c.masking) == 0.1);
  }
}
