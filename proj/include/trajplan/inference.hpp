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

// Inference pipelines: marginal prediction for interest agents and
// command-guided ego planning, plus their JSON-lines dump formats
// (docs/formats.md).

#include <array>
#include <string>
#include <vector>

#include "trajplan/metrics.hpp"
#include "trajplan/model.hpp"
#include "trajplan/selection.hpp"

namespace trajplan::harness
{

struct ModeDump
{
  double score = 0.0;
  bool backfilled = false;
  // t, mu_x, mu_y, sigma_x, sigma_y, rho, yaw_rate, speed. Means are in
  // world coordinates; sigma and rho refer to the agent frame axes.
  std::vector<std::array<double, 8>> rows;
};

struct AgentDump
{
  int id = 0;
  Command command = Command::Unknown;
  scenario::Frame frame;
  std::vector<ModeDump> modes;
};

struct SceneDump
{
  std::string scene;
  std::vector<AgentDump> agents;
};

// Decodes one agent under `command`, runs NMS and converts to world frame.
AgentDump decode_agent(const Model & model, const scenario::Scenario & scene, int agent_id,
                       Command command);

// Every interest agent valid at the current step, all commands Unknown.
SceneDump predict_scene(const Model & model, const scenario::Scenario & scene);
std::vector<SceneDump> predict(const Model & model, const std::vector<scenario::Scenario> & scenes);

metrics::SceneForecast to_forecast(const SceneDump & dump);

struct PlanResult
{
  std::string scene;
  Command command = Command::Unknown;
  AgentDump ego;
  std::vector<metrics::Point2> plan;  // top-1 mean track, world frame
  std::vector<AgentDump> agents;      // the 10 closest agents, Unknown commands
};

PlanResult plan(const Model & model, const scenario::Scenario & scene, Command ego_command);

// Throws std::invalid_argument for horizons shorter than 5 s.
metrics::PlanningResult evaluate_plan(const PlanResult & result, const scenario::Scenario & scene);

std::string to_json_line(const SceneDump & d);
SceneDump scene_dump_from_json(const std::string & line, std::size_t line_number = 1);
std::string to_json_line(const PlanResult & p);
PlanResult plan_from_json(const std::string & line, std::size_t line_number = 1);

void save_lines(const std::vector<std::string> & lines, const std::string & path);
std::vector<std::string> load_lines(const std::string & path);

}  // namespace trajplan::harness
