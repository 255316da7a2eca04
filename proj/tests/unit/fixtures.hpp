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

// Small configurations, scenes and intention points shared by the model
// level tests.

#include <cstdint>

#include "trajplan/commands.hpp"
#include "trajplan/config.hpp"
#include "trajplan/scenario.hpp"

namespace trajplan::testing
{

inline harness::Config tiny_config(std::size_t future = 10)
{
  auto c = harness::desk_preset();
  c.model.d_model = 16;
  c.model.heads = 2;
  c.model.encoder_layers = 1;
  c.model.decoder_layers = 2;
  c.model.num_modes = 4;
  c.model.k_neighbors = 8;
  c.model.max_agents = 6;
  c.model.max_map = 16;
  c.model.max_lanes = 4;
  c.model.max_points = 8;
  c.model.dynamic_map = 8;
  c.model.rel_pe_dim = 8;
  c.data.future_steps = static_cast<int>(future);
  c.data.agents = 4;
  c.data.scenarios = 3;
  c.data.holdout = 1;
  c.train.epochs = 2;
  c.train.lr_decay_start = 1;
  c.train.lr_decay_end = 1;
  c.masking.total_epochs = 2;
  c.masking.ramp_epochs = 1;
  c.loss.warmup_epoch = 1;
  return c;
}

// Distinct anchors per command.
inline commands::IntentionPointSet toy_points(std::size_t k)
{
  commands::IntentionPointSet p;
  p.k = k;
  for (std::size_t c = 0; c < kNumCommands; ++c) {
    for (std::size_t i = 0; i < k; ++i) {
      const double side = static_cast<double>(c) - 2.0;
      p.points[c].push_back({4.0 + 3.0 * static_cast<double>(i), side * (1.0 + 0.5 * static_cast<double>(i))});
    }
  }
  return p;
}

inline scenario::Scenario labelled_scene(std::uint64_t seed, scenario::Layout layout, int agents,
                                         int future)
{
  scenario::GeneratorOptions opt;
  opt.future_steps = future;
  opt.max_interest = agents;
  auto s = scenario::generate(seed, layout, agents, opt);
  commands::label_scenario(s);
  return s;
}

}  // namespace trajplan::testing
