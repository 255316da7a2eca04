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

// The assembled network (encoder, decoder, command embeddings), training
// samples cut from scenarios, and the per-sample loss.

#include <cstddef>
#include <memory>
#include <vector>

#include "trajplan/commands.hpp"
#include "trajplan/config.hpp"
#include "trajplan/decoder.hpp"
#include "trajplan/encoder.hpp"
#include "trajplan/losses.hpp"
#include "trajplan/nn.hpp"
#include "trajplan/scenario.hpp"

namespace trajplan::harness
{

class Model
{
public:
  Model(const Config & config, commands::IntentionPointSet points);
  Model(const Model &) = delete;
  Model & operator=(const Model &) = delete;

  const Config & config() const { return config_; }
  nn::ParameterStore & parameters() { return store_; }
  const nn::ParameterStore & parameters() const { return store_; }
  const commands::IntentionPointSet & intention_points() const { return points_; }
  const encoder::SceneEncoder & encoder() const { return *encoder_; }
  const decoder::MotionDecoder & decoder() const { return *decoder_; }
  const commands::CommandEmbeddingTable & embeddings() const { return embeddings_; }

  struct Output
  {
    encoder::SceneContext context;
    decoder::Prediction prediction;
    tensor::Tensor dense;  // [Na, T_f, 2]
  };
  Output forward(const encoder::SceneInputs & inputs, Command command) const;

private:
  Config config_;
  nn::ParameterStore store_;
  commands::IntentionPointSet points_;
  std::unique_ptr<encoder::SceneEncoder> encoder_;
  std::unique_ptr<decoder::MotionDecoder> decoder_;
  commands::CommandEmbeddingTable embeddings_;
};

// One (scene, center agent) pair in the center agent's frame.
struct Sample
{
  std::size_t scene_index = 0;
  int agent_id = 0;
  Command label = Command::Unknown;
  scenario::FrameView view;
  losses::TrackTarget target;               // center agent future
  std::vector<losses::TrackTarget> agents;  // per agent token, for the dense head
  std::vector<losses::Obstacle> obstacles;  // other agent tokens
  double half_length = 0.0;
  double half_width = 0.0;
  kinematics::Pose pose0;
  scenario::Scenario source;  // original scene, for reachable lanes
};

// Center agent must be valid at the current step with at least one valid
// future step.
Sample make_sample(const scenario::Scenario & scene, std::size_t scene_index, int agent_id,
                   const Config & config);
// Interest agents of every scene that satisfy make_sample's precondition.
std::vector<Sample> make_samples(const std::vector<scenario::Scenario> & scenes,
                                 const Config & config);

// Encoder inputs for the sample's agent under `command`; lanes are filtered
// by the command.
encoder::SceneInputs sample_inputs(const Sample & s, Command command, const Config & config);

struct SampleLoss
{
  losses::LossTerms terms;
  std::size_t positive_mode = 0;
};

// GMM and classification terms average over decoder layers; collision and
// dynamics use the final layer.
SampleLoss sample_loss(const Model & model, const Sample & sample, Command command);

}  // namespace trajplan::harness
