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


#include "trajplan/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace trajplan::harness
{

using nlohmann::json;

AgentDump decode_agent(const Model & model, const scenario::Scenario & scene, int agent_id,
                       Command command)
{
  const Config & cfg = model.config();
  tensor::NoTapeScope no_tape;
  const auto view = scenario::to_agent_frame(scene, agent_id);
  scenario::ReachableOptions ro;
  ro.max_lanes = cfg.model.max_lanes;
  ro.max_points = cfg.model.max_points;
  const auto lanes = scenario::reachable_lanes(scene, agent_id, command, ro);
  const auto inputs = encoder::build_inputs(view.scene, agent_id, lanes, cfg.encoder_config());
  const auto out = model.forward(inputs, command);
  const auto & p = out.prediction.final_layer();
  const auto kept = selection::nms(selection::from_prediction(p), cfg.selection.nms_threshold,
                                   cfg.selection.keep);
  AgentDump d;
  d.id = agent_id;
  d.command = command;
  d.frame = view.frame;
  const std::size_t tf = p.mu_x.dim(1);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    ModeDump m;
    m.score = kept.scores[i];
    m.backfilled = kept.backfilled[i];
    const std::size_t k = kept.source[i];
    for (std::size_t s = 0; s < tf; ++s) {
      const std::size_t q = k * tf + s;
      double wx, wy;
      view.frame.to_world(p.mu_x[q], p.mu_y[q], wx, wy);
      m.rows.push_back({static_cast<double>(s + 1) * scene.dt, wx, wy, std::exp(p.log_sigma_x[q]),
                        std::exp(p.log_sigma_y[q]), p.rho[q], p.yaw_rate[q], p.speed[q]});
    }
    d.modes.push_back(std::move(m));
  }
  return d;
}

SceneDump predict_scene(const Model & model, const scenario::Scenario & scene)
{
  SceneDump d;
  d.scene = scene.name;
  const std::size_t cur = static_cast<std::size_t>(scene.current_step());
  for (int id : scene.interest_ids) {
    const auto * a = scene.find_agent(id);
    if (!a || !a->states.at(cur).valid) continue;
    d.agents.push_back(decode_agent(model, scene, id, Command::Unknown));
  }
  return d;
}

std::vector<SceneDump> predict(const Model & model, const std::vector<scenario::Scenario> & scenes)
{
  std::vector<SceneDump> out;
  for (const auto & s : scenes) out.push_back(predict_scene(model, s));
  return out;
}

namespace
{

metrics::Track track_of(const ModeDump & m)
{
  metrics::Track t;
  for (const auto & r : m.rows) t.push_back({r[1], r[2]});
  return t;
}

std::size_t top1(const AgentDump & a)
{
  std::size_t best = 0;
  for (std::size_t i = 1; i < a.modes.size(); ++i) {
    if (a.modes[i].score > a.modes[best].score) best = i;
  }
  return best;
}

}  // namespace

metrics::SceneForecast to_forecast(const SceneDump & dump)
{
  metrics::SceneForecast f;
  f.scene = dump.scene;
  for (const auto & a : dump.agents) {
    metrics::AgentForecast af;
    af.agent_id = a.id;
    for (const auto & m : a.modes) {
      af.modes.push_back(track_of(m));
      af.scores.push_back(m.score);
    }
    f.agents.push_back(std::move(af));
  }
  return f;
}

PlanResult plan(const Model & model, const scenario::Scenario & scene, Command ego_command)
{
  PlanResult r;
  r.scene = scene.name;
  r.command = ego_command;
  r.ego = decode_agent(model, scene, scene.ego_id, ego_command);
  r.plan = track_of(r.ego.modes[top1(r.ego)]);
  const std::size_t cur = static_cast<std::size_t>(scene.current_step());
  const auto & ego = scene.find_agent(scene.ego_id)->states.at(cur);
  std::vector<std::pair<double, int>> near;
  for (const auto & a : scene.agents) {
    if (a.id == scene.ego_id || !a.states.at(cur).valid) continue;
    near.push_back({std::hypot(a.states[cur].x - ego.x, a.states[cur].y - ego.y), a.id});
  }
  std::sort(near.begin(), near.end());
  if (near.size() > 10) near.resize(10);
  for (const auto & [d, id] : near) r.agents.push_back(decode_agent(model, scene, id, Command::Unknown));
  return r;
}

metrics::PlanningResult evaluate_plan(const PlanResult & result, const scenario::Scenario & scene)
{
  const auto gt = metrics::ground_truth(scene, scene.ego_id);
  const std::size_t cur = static_cast<std::size_t>(scene.current_step());
  std::vector<metrics::PredictedAgent> agents;
  for (const auto & a : result.agents) {
    const auto & st = scene.find_agent(a.id)->states.at(cur);
    agents.push_back({track_of(a.modes[top1(a)]), st.length, st.width, st.heading, {st.x, st.y}});
  }
  return metrics::planning_metrics(result.plan, gt, agents, scene.dt);
}

namespace
{

json agent_json(const AgentDump & a)
{
  json modes = json::array();
  for (const auto & m : a.modes) {
    modes.push_back({{"score", m.score}, {"backfilled", m.backfilled}, {"rows", m.rows}});
  }
  return {{"id", a.id},
          {"command", std::string(command_name(a.command))},
          {"frame", {a.frame.ox, a.frame.oy, a.frame.heading}},
          {"modes", modes}};
}

AgentDump agent_from_json(const json & j)
{
  AgentDump a;
  a.id = j.at("id").get<int>();
  const auto c = parse_command(j.at("command").get<std::string>());
  if (!c) throw std::invalid_argument("unknown command '" + j.at("command").get<std::string>() + "'");
  a.command = *c;
  const auto f = j.at("frame").get<std::array<double, 3>>();
  a.frame = {f[0], f[1], f[2]};
  for (const auto & m : j.at("modes")) {
    ModeDump d;
    d.score = m.at("score").get<double>();
    d.backfilled = m.at("backfilled").get<bool>();
    d.rows = m.at("rows").get<std::vector<std::array<double, 8>>>();
    a.modes.push_back(std::move(d));
  }
  return a;
}

template <class F>
auto parse_line(const std::string & line, std::size_t n, const char * format, F && body)
{
  try {
    const json j = json::parse(line);
    if (j.value("format", std::string()) != format) {
      throw std::invalid_argument(std::string("expected format '") + format + "'");
    }
    if (j.value("version", 0) != 1) throw std::invalid_argument("unsupported version");
    return body(j);
  } catch (const std::exception & e) {
    throw std::invalid_argument("line " + std::to_string(n) + ": " + e.what());
  }
}

}  // namespace

std::string to_json_line(const SceneDump & d)
{
  json agents = json::array();
  for (const auto & a : d.agents) agents.push_back(agent_json(a));
  return json{{"format", "trajplan-predictions"}, {"version", 1}, {"scene", d.scene}, {"agents", agents}}
    .dump();
}

SceneDump scene_dump_from_json(const std::string & line, std::size_t n)
{
  return parse_line(line, n, "trajplan-predictions", [](const json & j) {
    SceneDump d;
    d.scene = j.at("scene").get<std::string>();
    for (const auto & a : j.at("agents")) d.agents.push_back(agent_from_json(a));
    return d;
  });
}

std::string to_json_line(const PlanResult & p)
{
  json agents = json::array();
  for (const auto & a : p.agents) agents.push_back(agent_json(a));
  json plan = json::array();
  for (const auto & q : p.plan) plan.push_back({q.x, q.y});
  return json{{"format", "trajplan-plan"},
              {"version", 1},
              {"scene", p.scene},
              {"command", std::string(command_name(p.command))},
              {"plan", plan},
              {"ego", agent_json(p.ego)},
              {"agents", agents}}
    .dump();
}

PlanResult plan_from_json(const std::string & line, std::size_t n)
{
  return parse_line(line, n, "trajplan-plan", [](const json & j) {
    PlanResult p;
    p.scene = j.at("scene").get<std::string>();
    const auto c = parse_command(j.at("command").get<std::string>());
    if (!c) throw std::invalid_argument("unknown command");
    p.command = *c;
    for (const auto & q : j.at("plan")) p.plan.push_back({q.at(0).get<double>(), q.at(1).get<double>()});
    p.ego = agent_from_json(j.at("ego"));
    for (const auto & a : j.at("agents")) p.agents.push_back(agent_from_json(a));
    return p;
  });
}

void save_lines(const std::vector<std::string> & lines, const std::string & path)
{
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (const auto & l : lines) out << l << '\n';
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::vector<std::string> load_lines(const std::string & path)
{
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string l;
  while (std::getline(in, l)) {
    if (!l.empty()) lines.push_back(l);
  }
  return lines;
}

}  // namespace trajplan::harness
