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


#pragma once

// Run configuration: model sizes, synthetic data, training schedule,
// masking, loss weights and selection. Serialized as JSON with one section
// per struct; see configs/ for the two presets.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajplan/commands.hpp"
#include "trajplan/decoder.hpp"
#include "trajplan/encoder.hpp"
#include "trajplan/losses.hpp"
#include "trajplan/scenario.hpp"

namespace trajplan::harness
{

struct ModelConfig
{
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t encoder_layers = 2;
  std::size_t decoder_layers = 2;
  std::size_t k_neighbors = 16;
  std::size_t num_modes = 8;
  std::size_t max_agents = 16;
  std::size_t max_map = 64;
  std::size_t max_lanes = 16;
  std::size_t max_points = 20;
  std::size_t dynamic_map = 32;
  std::size_t rel_pe_dim = 16;
  double position_scale = 10.0;
  std::uint64_t seed = 1;
};

struct DataConfig
{
  int history_steps = 11;
  int future_steps = 30;
  double dt = 0.1;
  std::size_t scenarios = 32;
  std::size_t holdout = 4;
  int agents = 8;
  int max_interest = 8;
  std::vector<scenario::Layout> layouts{scenario::Layout::Straight, scenario::Layout::Curve,
                                        scenario::Layout::FourWay};
  std::uint64_t seed = 2026;
};

struct TrainConfig
{
  int epochs = 12;
  std::size_t batch_size = 1;
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int lr_decay_start = 8;
  int lr_decay_end = 11;
  int lr_decay_every = 1;
  double lr_decay_factor = 0.5;
  std::uint64_t seed = 7;
};

struct SelectionConfig
{
  double nms_threshold = 2.5;
  std::size_t keep = 6;
};

struct Config
{
  std::string preset = "desk";
  ModelConfig model;
  DataConfig data;
  TrainConfig train;
  commands::MaskingSchedule masking;  // total_epochs follows train.epochs
  losses::LossWeights loss;
  losses::CollisionParams collision;  // dt follows data.dt
  SelectionConfig selection;

  encoder::EncoderConfig encoder_config() const;
  decoder::DecoderConfig decoder_config() const;
};

class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

Config desk_preset();
Config paper_preset();

// Throws ConfigError naming the offending key.
void validate(const Config & c);

// Keys absent from the text keep the values of the preset named by its
// "preset" field (desk when absent). Unknown keys are rejected.
Config config_from_json(const std::string & text);
std::string to_json(const Config & c, int indent = 2);
Config load_config(const std::string & path);

// Learning rate for a 0-based epoch.
double learning_rate(const TrainConfig & t, int epoch);

}  // namespace trajplan::harness
