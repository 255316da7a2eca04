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

// Scene data model, synthetic scene generator, agent-frame normalization and
// reachable-lane extraction.
//
// Units: meters, radians, m/s. Time steps are fixed at dt; a track holds
// history_steps + future_steps states and the current step is the last
// history step.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "trajplan/command.hpp"

namespace trajplan::scenario
{

enum class AgentType : std::uint8_t { Vehicle, Pedestrian, Cyclist };
enum class PolylineKind : std::uint8_t { LaneCenter, LaneSeparator, RoadBorder, Crosswalk };
enum class Layout : std::uint8_t { Straight, Curve, FourWay };

std::string_view agent_type_name(AgentType t);
std::optional<AgentType> parse_agent_type(std::string_view s);
std::string_view polyline_kind_name(PolylineKind k);
std::optional<PolylineKind> parse_polyline_kind(std::string_view s);
std::string_view layout_name(Layout l);
std::optional<Layout> parse_layout(std::string_view s);

struct AgentState
{
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double length = 0.0;
  double width = 0.0;
  bool valid = false;
};

struct AgentTrack
{
  int id = 0;
  AgentType type = AgentType::Vehicle;
  std::vector<AgentState> states;
};

struct MapPoint
{
  double x = 0.0;
  double y = 0.0;
  double direction = 0.0;  // heading of the segment leaving this point
};

struct Polyline
{
  int id = 0;
  PolylineKind kind = PolylineKind::LaneCenter;
  std::vector<MapPoint> points;
};

// Lane ids refer to LaneCenter polylines in Scenario::map.
struct LaneGraph
{
  std::map<int, std::vector<int>> successors;
};

struct Scenario
{
  std::string name;
  double dt = 0.1;
  int history_steps = 11;
  int future_steps = 80;
  std::vector<AgentTrack> agents;
  std::vector<Polyline> map;
  LaneGraph lane_graph;
  int ego_id = 0;
  std::vector<int> interest_ids;
  std::map<int, Command> command_labels;

  int current_step() const { return history_steps - 1; }
  int total_steps() const { return history_steps + future_steps; }
  const AgentTrack * find_agent(int id) const;
  const Polyline * find_polyline(int id) const;
};

class ScenarioError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Throws ScenarioError when an invariant does not hold.
void validate(const Scenario & s);

// ----------------------------------------------------------------------------
// Generator

enum class Maneuver : std::uint8_t { Straight, LeftTurn, RightTurn, Stop };

struct GeneratorOptions
{
  int history_steps = 11;
  int future_steps = 80;
  double dt = 0.1;
  int max_interest = 4;
  // Forces the ego (agent 0) maneuver when set. LeftTurn/RightTurn need the
  // four_way layout.
  std::optional<Maneuver> ego_maneuver;
};

// Deterministic in (seed, layout, n_agents, options). Throws ScenarioError
// when the layout cannot hold n_agents non-colliding agents.
Scenario generate(std::uint64_t seed, Layout layout, int n_agents,
                  const GeneratorOptions & options = {});

// ----------------------------------------------------------------------------
// Frames

// Rigid transform taking world coordinates into a frame with origin
// (ox, oy) and x-axis along `heading`.
struct Frame
{
  double ox = 0.0;
  double oy = 0.0;
  double heading = 0.0;

  void to_local(double x, double y, double & lx, double & ly) const;
  void to_world(double lx, double ly, double & x, double & y) const;
  double heading_to_local(double h) const;
  double heading_to_world(double h) const;
};

struct FrameView
{
  Scenario scene;  // every position, heading and velocity in the agent frame
  Frame frame;     // maps scene coordinates back to the original frame
};

// Throws ScenarioError when the agent is unknown or invalid at the current
// step.
FrameView to_agent_frame(const Scenario & s, int agent_id);
Scenario from_agent_frame(const FrameView & view);

// ----------------------------------------------------------------------------
// Reachable lanes

struct ReachableLane
{
  int lane_id = 0;
  double path_distance = 0.0;  // along the graph from the agent to the lane start
  std::vector<MapPoint> points;  // querying agent's frame
};

struct ReachableLanes
{
  std::vector<ReachableLane> lanes;
};

struct ReachableOptions
{
  std::size_t max_lanes = 16;
  std::size_t max_points = 20;
  double max_lateral = 5.0;
  double extra_distance = 20.0;
};

// Lane nearest to the agent's current position among lanes whose direction
// is within 90 degrees of the agent heading (any lane when none qualifies);
// nullopt when nothing lies within max_lateral.
std::optional<int> nearest_lane(const Scenario & s, int agent_id, double max_lateral = 5.0);

double polyline_length(const std::vector<MapPoint> & points);

ReachableLanes reachable_lanes(const Scenario & s, int agent_id, std::optional<Command> command,
                               const ReachableOptions & options = {});

// ----------------------------------------------------------------------------
// JSON-lines I/O (schema in docs/formats.md)

std::string to_json_line(const Scenario & s);
// `line_number` is only used in error messages.
Scenario from_json_line(std::string_view line, std::size_t line_number = 1);

void save(const std::vector<Scenario> & scenes, const std::string & path);
void save(const Scenario & scene, const std::string & path);
std::vector<Scenario> load(const std::string & path);

}  // namespace trajplan::scenario
