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


#include "trajplan/model.hpp"

#include <cmath>
#include <stdexcept>

namespace trajplan::harness
{

namespace t = tensor;

Model::Model(const Config & config, commands::IntentionPointSet points)
  : config_(config), points_(std::move(points))
{
  validate(config_);
  for (Command c : kAllCommands) {
    if (points_.anchors(c).size() != config_.model.num_modes) {
      throw std::invalid_argument("model: intention points for " + std::string(command_name(c)) +
                                  " have " + std::to_string(points_.anchors(c).size()) +
                                  " anchors, expected " + std::to_string(config_.model.num_modes));
    }
  }
  Rng rng(config_.model.seed);
  encoder_ = std::make_unique<encoder::SceneEncoder>(store_, config_.encoder_config(), rng);
  decoder_ = std::make_unique<decoder::MotionDecoder>(store_, config_.decoder_config(), rng);
  embeddings_ = commands::CommandEmbeddingTable::create(config_.model.d_model,
                                                        mix_seed(config_.model.seed, 99));
  store_.adopt("command_embedding", embeddings_.table);
}

Model::Output Model::forward(const encoder::SceneInputs & inputs, Command command) const
{
  Output out;
  out.context = (*encoder_)(inputs);
  out.prediction = (*decoder_)(out.context, points_.anchors(command), embeddings_.row(command));
  out.dense = encoder_->dense_prediction(out.context);
  return out;
}

namespace
{

losses::TrackTarget future_of(const scenario::AgentTrack & a, int current, std::size_t tf)
{
  losses::TrackTarget g;
  for (std::size_t i = 0; i < tf; ++i) {
    const std::size_t k = static_cast<std::size_t>(current) + 1 + i;
    const bool ok = k < a.states.size() && a.states[k].valid;
    g.x.push_back(ok ? a.states[k].x : 0.0);
    g.y.push_back(ok ? a.states[k].y : 0.0);
    g.valid.push_back(ok ? 1.0 : 0.0);
  }
  return g;
}

const scenario::AgentState & reference_state(const scenario::AgentTrack & a, int current)
{
  for (int i = current; i >= 0; --i) {
    if (a.states[static_cast<std::size_t>(i)].valid) return a.states[static_cast<std::size_t>(i)];
  }
  for (const auto & st : a.states) {
    if (st.valid) return st;
  }
  return a.states.front();
}

}  // namespace

encoder::SceneInputs sample_inputs(const Sample & s, Command command, const Config & config)
{
  scenario::ReachableOptions ro;
  ro.max_lanes = config.model.max_lanes;
  ro.max_points = config.model.max_points;
  const auto lanes = scenario::reachable_lanes(s.source, s.agent_id, command, ro);
  return encoder::build_inputs(s.view.scene, s.agent_id, lanes, config.encoder_config());
}

Sample make_sample(const scenario::Scenario & scene, std::size_t scene_index, int agent_id,
                   const Config & config)
{
  const std::size_t tf = static_cast<std::size_t>(config.data.future_steps);
  if (scene.future_steps != config.data.future_steps || scene.history_steps != config.data.history_steps) {
    throw scenario::ScenarioError("scene '" + scene.name + "' has " +
                                  std::to_string(scene.history_steps) + "+" +
                                  std::to_string(scene.future_steps) +
                                  " steps, config expects " + std::to_string(config.data.history_steps) +
                                  "+" + std::to_string(config.data.future_steps));
  }
  Sample s;
  s.scene_index = scene_index;
  s.agent_id = agent_id;
  s.source = scene;
  s.view = scenario::to_agent_frame(scene, agent_id);
  const auto it = scene.command_labels.find(agent_id);
  s.label = it == scene.command_labels.end() ? Command::Unknown : it->second;
  const int cur = scene.current_step();
  const auto & me = *s.view.scene.find_agent(agent_id);
  s.target = future_of(me, cur, tf);
  if (s.target.valid_count() == 0) {
    throw std::invalid_argument("agent " + std::to_string(agent_id) + " has no valid future step");
  }
  const auto & now = me.states[static_cast<std::size_t>(cur)];
  s.half_length = 0.5 * now.length;
  s.half_width = 0.5 * now.width;
  s.pose0 = {0.0, 0.0, 0.0, std::hypot(now.vx, now.vy)};

  // Token order of build_inputs decides which agents are seen.
  const auto inputs = sample_inputs(s, Command::Unknown, config);
  for (int id : inputs.agent_ids) {
    const auto & a = *s.view.scene.find_agent(id);
    s.agents.push_back(future_of(a, cur, tf));
    if (id == agent_id) continue;
    losses::Obstacle o;
    const auto & ref = reference_state(a, cur);
    o.half_length = 0.5 * ref.length;
    o.half_width = 0.5 * ref.width;
    for (std::size_t i = 0; i < tf; ++i) {
      const std::size_t k = static_cast<std::size_t>(cur) + 1 + i;
      const bool ok = k < a.states.size() && a.states[k].valid;
      o.x.push_back(ok ? a.states[k].x : 0.0);
      o.y.push_back(ok ? a.states[k].y : 0.0);
      o.heading.push_back(ok ? a.states[k].heading : 0.0);
      o.valid.push_back(ok ? 1.0 : 0.0);
    }
    s.obstacles.push_back(std::move(o));
  }
  return s;
}

std::vector<Sample> make_samples(const std::vector<scenario::Scenario> & scenes, const Config & config)
{
  std::vector<Sample> out;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto & s = scenes[i];
    const std::size_t cur = static_cast<std::size_t>(s.current_step());
    for (int id : s.interest_ids) {
      const auto * a = s.find_agent(id);
      if (!a || !a->states.at(cur).valid) continue;
      bool future = false;
      for (std::size_t k = cur + 1; k < a->states.size(); ++k) future |= a->states[k].valid;
      if (!future) continue;
      out.push_back(make_sample(s, i, id, config));
    }
  }
  return out;
}

SampleLoss sample_loss(const Model & model, const Sample & sample, Command command)
{
  const Config & cfg = model.config();
  const auto inputs = sample_inputs(sample, command, cfg);
  const auto out = model.forward(inputs, command);
  const auto & layers = out.prediction.layers;
  SampleLoss r;
  r.positive_mode = losses::hard_assign(out.prediction.anchors, sample.target.endpoint());
  t::Tensor gmm = t::Tensor::scalar(0.0), cls = t::Tensor::scalar(0.0);
  for (const auto & l : layers) {
    gmm = t::add(gmm, losses::gmm_nll(l, r.positive_mode, sample.target));
    cls = t::add(cls, losses::cls_loss(l.scores, r.positive_mode));
  }
  const double inv = 1.0 / static_cast<double>(layers.size());
  r.terms.gmm = t::scale(gmm, inv);
  r.terms.cls = t::scale(cls, inv);
  r.terms.dense = losses::dense_loss(out.dense, sample.agents);
  const auto & fin = out.prediction.final_layer();
  r.terms.collision = losses::collision_loss(fin.mu_x, fin.mu_y, sample.half_length,
                                             sample.half_width, sample.obstacles, cfg.collision);
  r.terms.dynamics = losses::dynamics_loss(fin, sample.pose0, sample.target.valid, cfg.data.dt);
  return r;
}

}  // namespace trajplan::harness
