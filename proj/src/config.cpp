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


#include "trajplan/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace trajplan::harness
{

using nlohmann::json;

encoder::EncoderConfig Config::encoder_config() const
{
  encoder::EncoderConfig e;
  e.d_model = model.d_model;
  e.heads = model.heads;
  e.layers = model.encoder_layers;
  e.k_neighbors = model.k_neighbors;
  e.max_agents = model.max_agents;
  e.max_map = model.max_map;
  e.max_lanes = model.max_lanes;
  e.max_points = model.max_points;
  e.rel_pe_dim = model.rel_pe_dim;
  e.future_steps = static_cast<std::size_t>(data.future_steps);
  e.position_scale = model.position_scale;
  return e;
}

decoder::DecoderConfig Config::decoder_config() const
{
  decoder::DecoderConfig d;
  d.d_model = model.d_model;
  d.heads = model.heads;
  d.layers = model.decoder_layers;
  d.future_steps = static_cast<std::size_t>(data.future_steps);
  d.dynamic_map = model.dynamic_map;
  d.position_scale = model.position_scale;
  d.dt = data.dt;
  return d;
}

Config desk_preset()
{
  Config c;
  c.masking.total_epochs = c.train.epochs;
  c.masking.ramp_epochs = 3;
  c.loss.warmup_epoch = 4;
  c.collision.dt = c.data.dt;
  return c;
}

Config paper_preset()
{
  Config c;
  c.preset = "paper";
  c.model.d_model = 256;
  c.model.encoder_layers = 6;
  c.model.decoder_layers = 6;
  c.model.num_modes = 64;
  c.model.max_agents = 64;
  c.model.dynamic_map = 128;
  c.data.future_steps = 80;
  c.data.scenarios = 256;
  c.data.holdout = 32;
  c.data.agents = 12;
  c.train.epochs = 35;
  c.train.batch_size = 20;
  c.train.learning_rate = 1e-4;
  c.train.lr_decay_start = 20;
  c.train.lr_decay_end = 30;
  c.train.lr_decay_every = 2;
  c.masking.total_epochs = 35;
  c.masking.ramp_epochs = 5;
  c.loss.warmup_epoch = 10;
  c.collision.dt = c.data.dt;
  return c;
}

void validate(const Config & c)
{
  const auto fail = [](const std::string & key, const std::string & why) {
    throw ConfigError("config: " + key + " " + why);
  };
  const auto & m = c.model;
  if (m.d_model == 0 || m.heads == 0 || m.d_model % m.heads != 0 || m.d_model % 4 != 0) {
    fail("model.d_model", "must be a multiple of 4 and of model.heads");
  }
  if (m.decoder_layers == 0) fail("model.decoder_layers", "must be at least 1");
  if (m.k_neighbors == 0) fail("model.k_neighbors", "must be at least 1");
  if (m.num_modes == 0) fail("model.num_modes", "must be at least 1");
  if (m.max_agents == 0) fail("model.max_agents", "must be at least 1");
  if (m.max_map == 0 || m.max_lanes == 0 || m.max_points < 2) fail("model.max_*", "too small");
  if (m.dynamic_map == 0) fail("model.dynamic_map", "must be at least 1");
  if (m.rel_pe_dim == 0 || m.rel_pe_dim % 4 != 0) fail("model.rel_pe_dim", "must be a multiple of 4");
  if (!(m.position_scale > 0)) fail("model.position_scale", "must be positive");
  const auto & d = c.data;
  if (d.history_steps < 1) fail("data.history_steps", "must be at least 1");
  if (d.future_steps < 1) fail("data.future_steps", "must be at least 1");
  if (!(d.dt > 0)) fail("data.dt", "must be positive");
  if (d.scenarios == 0) fail("data.scenarios", "must be at least 1");
  if (d.agents < 1) fail("data.agents", "must be at least 1");
  if (d.layouts.empty()) fail("data.layouts", "must not be empty");
  const auto & t = c.train;
  if (t.epochs < 1) fail("train.epochs", "must be at least 1");
  if (t.batch_size == 0) fail("train.batch_size", "must be at least 1");
  if (!(t.learning_rate > 0)) fail("train.learning_rate", "must be positive");
  if (!(t.weight_decay >= 0)) fail("train.weight_decay", "must be nonnegative");
  if (!(t.beta1 >= 0 && t.beta1 < 1 && t.beta2 >= 0 && t.beta2 < 1)) fail("train.beta*", "must be in [0, 1)");
  if (!(t.epsilon > 0)) fail("train.epsilon", "must be positive");
  if (t.lr_decay_every < 1) fail("train.lr_decay_every", "must be at least 1");
  if (t.lr_decay_end < t.lr_decay_start) fail("train.lr_decay_end", "precedes lr_decay_start");
  if (!(t.lr_decay_factor > 0 && t.lr_decay_factor <= 1)) fail("train.lr_decay_factor", "must be in (0, 1]");
  if (c.loss.warmup_epoch >= t.epochs) fail("loss.warmup_epoch", "must be below train.epochs");
  if (c.masking.ramp_epochs > t.epochs) fail("masking.ramp_epochs", "exceeds train.epochs");
  if (c.masking.total_epochs != t.epochs) fail("masking", "total_epochs must equal train.epochs");
  try {
    losses::validate(c.loss);
    commands::validate(c.masking);
  } catch (const std::exception & e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!(c.collision.beta > 0 && c.collision.tau > 0)) fail("loss.collision_beta", "and tau must be positive");
  if (!(c.selection.nms_threshold > 0)) fail("selection.nms_threshold", "must be positive");
  if (c.selection.keep == 0) fail("selection.keep", "must be at least 1");
}

namespace
{

template <class T>
void read(const json & section, const std::string & sname, const char * key, T & out)
{
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception &) {
    throw ConfigError("config: " + sname + "." + key + " has the wrong type");
  }
}

void reject_unknown(const json & section, const std::string & sname,
                    std::initializer_list<const char *> keys)
{
  if (!section.is_object()) throw ConfigError("config: section '" + sname + "' must be an object");
  for (const auto & [k, v] : section.items()) {
    bool known = false;
    for (const char * key : keys) known |= k == key;
    if (!known) throw ConfigError("config: unknown key " + sname + "." + k);
  }
}

}  // namespace

Config config_from_json(const std::string & text)
{
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error & e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown(j, "config", {"preset", "model", "data", "train", "masking", "loss", "selection"});
  const std::string preset = j.value("preset", std::string("desk"));
  Config c;
  if (preset == "desk") {
    c = desk_preset();
  } else if (preset == "paper") {
    c = paper_preset();
  } else {
    throw ConfigError("config: unknown preset '" + preset + "'");
  }

  if (j.contains("model")) {
    const json & s = j["model"];
    reject_unknown(s, "model", {"d_model", "heads", "encoder_layers", "decoder_layers", "k_neighbors",
                                "num_modes", "max_agents", "max_map", "max_lanes", "max_points",
                                "dynamic_map", "rel_pe_dim", "position_scale", "seed"});
    auto & m = c.model;
    read(s, "model", "d_model", m.d_model);
    read(s, "model", "heads", m.heads);
    read(s, "model", "encoder_layers", m.encoder_layers);
    read(s, "model", "decoder_layers", m.decoder_layers);
    read(s, "model", "k_neighbors", m.k_neighbors);
    read(s, "model", "num_modes", m.num_modes);
    read(s, "model", "max_agents", m.max_agents);
    read(s, "model", "max_map", m.max_map);
    read(s, "model", "max_lanes", m.max_lanes);
    read(s, "model", "max_points", m.max_points);
    read(s, "model", "dynamic_map", m.dynamic_map);
    read(s, "model", "rel_pe_dim", m.rel_pe_dim);
    read(s, "model", "position_scale", m.position_scale);
    read(s, "model", "seed", m.seed);
  }
  if (j.contains("data")) {
    const json & s = j["data"];
    reject_unknown(s, "data", {"history_steps", "future_steps", "dt", "scenarios", "holdout", "agents",
                               "max_interest", "layouts", "seed"});
    auto & d = c.data;
    read(s, "data", "history_steps", d.history_steps);
    read(s, "data", "future_steps", d.future_steps);
    read(s, "data", "dt", d.dt);
    read(s, "data", "scenarios", d.scenarios);
    read(s, "data", "holdout", d.holdout);
    read(s, "data", "agents", d.agents);
    read(s, "data", "max_interest", d.max_interest);
    read(s, "data", "seed", d.seed);
    if (s.contains("layouts")) {
      std::vector<std::string> names;
      read(s, "data", "layouts", names);
      d.layouts.clear();
      for (const auto & n : names) {
        const auto l = scenario::parse_layout(n);
        if (!l) throw ConfigError("config: data.layouts has unknown layout '" + n + "'");
        d.layouts.push_back(*l);
      }
    }
  }
  if (j.contains("train")) {
    const json & s = j["train"];
    reject_unknown(s, "train", {"epochs", "batch_size", "learning_rate", "weight_decay", "beta1", "beta2",
                                "epsilon", "lr_decay_start", "lr_decay_end", "lr_decay_every",
                                "lr_decay_factor", "seed"});
    auto & t = c.train;
    read(s, "train", "epochs", t.epochs);
    read(s, "train", "batch_size", t.batch_size);
    read(s, "train", "learning_rate", t.learning_rate);
    read(s, "train", "weight_decay", t.weight_decay);
    read(s, "train", "beta1", t.beta1);
    read(s, "train", "beta2", t.beta2);
    read(s, "train", "epsilon", t.epsilon);
    read(s, "train", "lr_decay_start", t.lr_decay_start);
    read(s, "train", "lr_decay_end", t.lr_decay_end);
    read(s, "train", "lr_decay_every", t.lr_decay_every);
    read(s, "train", "lr_decay_factor", t.lr_decay_factor);
    read(s, "train", "seed", t.seed);
  }
  c.masking.total_epochs = c.train.epochs;
  if (j.contains("masking")) {
    const json & s = j["masking"];
    reject_unknown(s, "masking", {"start_availability", "end_availability", "ramp_epochs"});
    read(s, "masking", "start_availability", c.masking.start_availability);
    read(s, "masking", "end_availability", c.masking.end_availability);
    read(s, "masking", "ramp_epochs", c.masking.ramp_epochs);
  }
  if (j.contains("loss")) {
    const json & s = j["loss"];
    reject_unknown(s, "loss", {"gmm", "cls", "dense", "collision", "dynamics", "warmup_epoch",
                               "collision_beta", "collision_tau"});
    read(s, "loss", "gmm", c.loss.gmm);
    read(s, "loss", "cls", c.loss.cls);
    read(s, "loss", "dense", c.loss.dense);
    read(s, "loss", "collision", c.loss.collision);
    read(s, "loss", "dynamics", c.loss.dynamics);
    read(s, "loss", "warmup_epoch", c.loss.warmup_epoch);
    read(s, "loss", "collision_beta", c.collision.beta);
    read(s, "loss", "collision_tau", c.collision.tau);
  }
  c.collision.dt = c.data.dt;
  if (j.contains("selection")) {
    const json & s = j["selection"];
    reject_unknown(s, "selection", {"nms_threshold", "keep"});
    read(s, "selection", "nms_threshold", c.selection.nms_threshold);
    read(s, "selection", "keep", c.selection.keep);
  }
  c.preset = preset;
  validate(c);
  return c;
}

std::string to_json(const Config & c, int indent)
{
  json j;
  j["preset"] = c.preset;
  const auto & m = c.model;
  j["model"] = {{"d_model", m.d_model},
                {"heads", m.heads},
                {"encoder_layers", m.encoder_layers},
                {"decoder_layers", m.decoder_layers},
                {"k_neighbors", m.k_neighbors},
                {"num_modes", m.num_modes},
                {"max_agents", m.max_agents},
                {"max_map", m.max_map},
                {"max_lanes", m.max_lanes},
                {"max_points", m.max_points},
                {"dynamic_map", m.dynamic_map},
                {"rel_pe_dim", m.rel_pe_dim},
                {"position_scale", m.position_scale},
                {"seed", m.seed}};
  const auto & d = c.data;
  std::vector<std::string> layouts;
  for (auto l : d.layouts) layouts.emplace_back(scenario::layout_name(l));
  j["data"] = {{"history_steps", d.history_steps},
               {"future_steps", d.future_steps},
               {"dt", d.dt},
               {"scenarios", d.scenarios},
               {"holdout", d.holdout},
               {"agents", d.agents},
               {"max_interest", d.max_interest},
               {"layouts", layouts},
               {"seed", d.seed}};
  const auto & t = c.train;
  j["train"] = {{"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"learning_rate", t.learning_rate},
                {"weight_decay", t.weight_decay},
                {"beta1", t.beta1},
                {"beta2", t.beta2},
                {"epsilon", t.epsilon},
                {"lr_decay_start", t.lr_decay_start},
                {"lr_decay_end", t.lr_decay_end},
                {"lr_decay_every", t.lr_decay_every},
                {"lr_decay_factor", t.lr_decay_factor},
                {"seed", t.seed}};
  j["masking"] = {{"start_availability", c.masking.start_availability},
                  {"end_availability", c.masking.end_availability},
                  {"ramp_epochs", c.masking.ramp_epochs}};
  j["loss"] = {{"gmm", c.loss.gmm},
               {"cls", c.loss.cls},
               {"dense", c.loss.dense},
               {"collision", c.loss.collision},
               {"dynamics", c.loss.dynamics},
               {"warmup_epoch", c.loss.warmup_epoch},
               {"collision_beta", c.collision.beta},
               {"collision_tau", c.collision.tau}};
  j["selection"] = {{"nms_threshold", c.selection.nms_threshold}, {"keep", c.selection.keep}};
  return j.dump(indent);
}

Config load_config(const std::string & path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

double learning_rate(const TrainConfig & t, int epoch)
{
  if (epoch < t.lr_decay_start) return t.learning_rate;
  const int e = std::min(epoch, t.lr_decay_end);
  const int decays = (e - t.lr_decay_start) / t.lr_decay_every + 1;
  return t.learning_rate * std::pow(t.lr_decay_factor, decays);
}

}  // namespace trajplan::harness
