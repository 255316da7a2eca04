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


#include "trajplan/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <set>

#include "trajplan/kinematics.hpp"

namespace trajplan
{

std::string_view command_name(Command c)
{
  switch (c) {
    case Command::LeftTurn: return "left_turn";
    case Command::Straight: return "straight";
    case Command::RightTurn: return "right_turn";
    case Command::Stationary: return "stationary";
    case Command::Unknown: return "unknown";
    case Command::Vru: return "vru";
  }
  return "unknown";
}

std::optional<Command> parse_command(std::string_view name)
{
  for (Command c : kAllCommands) {
    if (command_name(c) == name) return c;
  }
  return std::nullopt;
}

}  // namespace trajplan

namespace trajplan::scenario
{

using kinematics::wrap_angle;

std::string_view agent_type_name(AgentType t)
{
  switch (t) {
    case AgentType::Vehicle: return "vehicle";
    case AgentType::Pedestrian: return "pedestrian";
    case AgentType::Cyclist: return "cyclist";
  }
  return "vehicle";
}

std::optional<AgentType> parse_agent_type(std::string_view s)
{
  for (AgentType t : {AgentType::Vehicle, AgentType::Pedestrian, AgentType::Cyclist}) {
    if (agent_type_name(t) == s) return t;
  }
  return std::nullopt;
}

std::string_view polyline_kind_name(PolylineKind k)
{
  switch (k) {
    case PolylineKind::LaneCenter: return "lane_center";
    case PolylineKind::LaneSeparator: return "lane_separator";
    case PolylineKind::RoadBorder: return "road_border";
    case PolylineKind::Crosswalk: return "crosswalk";
  }
  return "lane_center";
}

std::optional<PolylineKind> parse_polyline_kind(std::string_view s)
{
  for (PolylineKind k : {PolylineKind::LaneCenter, PolylineKind::LaneSeparator,
                         PolylineKind::RoadBorder, PolylineKind::Crosswalk}) {
    if (polyline_kind_name(k) == s) return k;
  }
  return std::nullopt;
}

std::string_view layout_name(Layout l)
{
  switch (l) {
    case Layout::Straight: return "straight";
    case Layout::Curve: return "curve";
    case Layout::FourWay: return "four_way";
  }
  return "straight";
}

std::optional<Layout> parse_layout(std::string_view s)
{
  for (Layout l : {Layout::Straight, Layout::Curve, Layout::FourWay}) {
    if (layout_name(l) == s) return l;
  }
  return std::nullopt;
}

const AgentTrack * Scenario::find_agent(int id) const
{
  for (const auto & a : agents) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

const Polyline * Scenario::find_polyline(int id) const
{
  for (const auto & p : map) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

void validate(const Scenario & s)
{
  const auto fail = [&](const std::string & what) {
    throw ScenarioError("scenario '" + s.name + "': " + what);
  };
  if (!(s.dt > 0.0)) fail("dt must be positive");
  if (s.history_steps < 1 || s.future_steps < 1) fail("step counts must be positive");
  std::set<int> agent_ids;
  for (const auto & a : s.agents) {
    if (!agent_ids.insert(a.id).second) fail("duplicate agent id " + std::to_string(a.id));
    if (static_cast<int>(a.states.size()) != s.total_steps()) {
      fail("agent " + std::to_string(a.id) + " has " + std::to_string(a.states.size()) +
           " states, expected " + std::to_string(s.total_steps()));
    }
    for (const auto & st : a.states) {
      if (st.valid && !(st.length > 0.0 && st.width > 0.0)) {
        fail("agent " + std::to_string(a.id) + " has a valid state without positive extents");
      }
      if (st.valid && (st.heading <= -std::numbers::pi || st.heading > std::numbers::pi)) {
        fail("agent " + std::to_string(a.id) + " heading outside (-pi, pi]");
      }
    }
  }
  if (!agent_ids.count(s.ego_id)) fail("ego id " + std::to_string(s.ego_id) + " not found");
  for (int id : s.interest_ids) {
    if (!agent_ids.count(id)) fail("interest id " + std::to_string(id) + " not found");
  }
  std::set<int> poly_ids, lane_ids;
  for (const auto & p : s.map) {
    if (!poly_ids.insert(p.id).second) fail("duplicate polyline id " + std::to_string(p.id));
    if (p.points.size() < 2) fail("polyline " + std::to_string(p.id) + " has fewer than 2 points");
    if (p.kind == PolylineKind::LaneCenter) lane_ids.insert(p.id);
  }
  for (const auto & [lane, succ] : s.lane_graph.successors) {
    if (!lane_ids.count(lane)) fail("lane graph references unknown lane " + std::to_string(lane));
    for (int n : succ) {
      if (!lane_ids.count(n)) fail("lane " + std::to_string(lane) + " has unknown successor " +
                                   std::to_string(n));
      if (n == lane) fail("lane " + std::to_string(lane) + " lists itself as successor");
    }
  }
}

// ----------------------------------------------------------------------------

void Frame::to_local(double x, double y, double & lx, double & ly) const
{
  const double c = std::cos(heading), s = std::sin(heading);
  const double dx = x - ox, dy = y - oy;
  lx = c * dx + s * dy;
  ly = -s * dx + c * dy;
}

void Frame::to_world(double lx, double ly, double & x, double & y) const
{
  const double c = std::cos(heading), s = std::sin(heading);
  x = ox + c * lx - s * ly;
  y = oy + s * lx + c * ly;
}

double Frame::heading_to_local(double h) const { return wrap_angle(h - heading); }
double Frame::heading_to_world(double h) const { return wrap_angle(h + heading); }

namespace
{

template <class PointFn, class HeadingFn, class VecFn>
Scenario transform_scene(const Scenario & s, PointFn point, HeadingFn head, VecFn vec)
{
  Scenario out = s;
  for (auto & a : out.agents) {
    for (auto & st : a.states) {
      if (!st.valid) continue;
      point(st.x, st.y);
      st.heading = head(st.heading);
      vec(st.vx, st.vy);
    }
  }
  for (auto & p : out.map) {
    for (auto & pt : p.points) {
      point(pt.x, pt.y);
      pt.direction = head(pt.direction);
    }
  }
  return out;
}

}  // namespace

FrameView to_agent_frame(const Scenario & s, int agent_id)
{
  const AgentTrack * a = s.find_agent(agent_id);
  if (!a) throw ScenarioError("to_agent_frame: unknown agent " + std::to_string(agent_id));
  const AgentState & cur = a->states.at(static_cast<std::size_t>(s.current_step()));
  if (!cur.valid) {
    throw ScenarioError("to_agent_frame: agent " + std::to_string(agent_id) +
                        " is invalid at the current step");
  }
  FrameView view;
  view.frame = Frame{cur.x, cur.y, cur.heading};
  const Frame f = view.frame;
  const double c = std::cos(f.heading), sn = std::sin(f.heading);
  view.scene = transform_scene(
    s, [&](double & x, double & y) { f.to_local(x, y, x, y); },
    [&](double h) { return f.heading_to_local(h); },
    [&](double & vx, double & vy) {
      const double rx = c * vx + sn * vy;
      vy = -sn * vx + c * vy;
      vx = rx;
    });
  return view;
}

Scenario from_agent_frame(const FrameView & view)
{
  const Frame f = view.frame;
  const double c = std::cos(f.heading), sn = std::sin(f.heading);
  return transform_scene(
    view.scene, [&](double & x, double & y) { f.to_world(x, y, x, y); },
    [&](double h) { return f.heading_to_world(h); },
    [&](double & vx, double & vy) {
      const double rx = c * vx - sn * vy;
      vy = sn * vx + c * vy;
      vx = rx;
    });
}

// ----------------------------------------------------------------------------

double polyline_length(const std::vector<MapPoint> & points)
{
  double len = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    len += std::hypot(points[i].x - points[i - 1].x, points[i].y - points[i - 1].y);
  }
  return len;
}

namespace
{

struct Projection
{
  double distance = std::numeric_limits<double>::infinity();
  double along = 0.0;      // arc length of the foot point
  double direction = 0.0;  // segment heading at the foot point
};

Projection project(const std::vector<MapPoint> & pts, double x, double y)
{
  Projection best;
  double acc = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double ax = pts[i - 1].x, ay = pts[i - 1].y;
    const double dx = pts[i].x - ax, dy = pts[i].y - ay;
    const double len2 = dx * dx + dy * dy;
    const double seg = std::sqrt(len2);
    double u = len2 > 0.0 ? ((x - ax) * dx + (y - ay) * dy) / len2 : 0.0;
    u = std::clamp(u, 0.0, 1.0);
    const double d = std::hypot(ax + u * dx - x, ay + u * dy - y);
    if (d < best.distance) {
      best.distance = d;
      best.along = acc + u * seg;
      best.direction = std::atan2(dy, dx);
    }
    acc += seg;
  }
  return best;
}

bool in_sector(Command c, double bearing)
{
  constexpr double deg = std::numbers::pi / 180.0;
  switch (c) {
    case Command::LeftTurn: return bearing > 15.0 * deg && bearing < 135.0 * deg;
    case Command::RightTurn: return bearing < -15.0 * deg && bearing > -135.0 * deg;
    case Command::Straight: return std::abs(bearing) <= 15.0 * deg;
    default: return true;
  }
}

double terminal_bearing(const std::vector<MapPoint> & pts)
{
  const auto & a = pts[pts.size() - 2];
  const auto & b = pts.back();
  return std::atan2(b.y - a.y, b.x - a.x);
}

}  // namespace

std::optional<int> nearest_lane(const Scenario & s, int agent_id, double max_lateral)
{
  const AgentTrack * a = s.find_agent(agent_id);
  if (!a) throw ScenarioError("nearest_lane: unknown agent " + std::to_string(agent_id));
  const AgentState & cur = a->states.at(static_cast<std::size_t>(s.current_step()));
  if (!cur.valid) return std::nullopt;
  std::optional<int> best_aligned, best_any;
  double d_aligned = std::numeric_limits<double>::infinity();
  double d_any = d_aligned;
  for (const auto & p : s.map) {
    if (p.kind != PolylineKind::LaneCenter || p.points.size() < 2) continue;
    const Projection pr = project(p.points, cur.x, cur.y);
    if (pr.distance > max_lateral) continue;
    if (pr.distance < d_any) {
      d_any = pr.distance;
      best_any = p.id;
    }
    if (std::abs(wrap_angle(pr.direction - cur.heading)) <= std::numbers::pi / 2 &&
        pr.distance < d_aligned) {
      d_aligned = pr.distance;
      best_aligned = p.id;
    }
  }
  return best_aligned ? best_aligned : best_any;
}

ReachableLanes reachable_lanes(const Scenario & s, int agent_id, std::optional<Command> command,
                               const ReachableOptions & options)
{
  ReachableLanes out;
  const std::optional<int> start = nearest_lane(s, agent_id, options.max_lateral);
  if (!start) return out;
  const AgentTrack * a = s.find_agent(agent_id);
  const AgentState & cur = a->states.at(static_cast<std::size_t>(s.current_step()));
  const double speed = std::hypot(cur.vx, cur.vy);
  const double budget = speed * s.future_steps * s.dt + options.extra_distance;

  std::map<int, double> dist;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> frontier;
  dist[*start] = 0.0;
  frontier.push({0.0, *start});
  const Polyline * start_poly = s.find_polyline(*start);
  const double start_remaining =
    polyline_length(start_poly->points) - project(start_poly->points, cur.x, cur.y).along;
  while (!frontier.empty()) {
    const auto [d, lane] = frontier.top();
    frontier.pop();
    if (d > dist[lane]) continue;
    const auto it = s.lane_graph.successors.find(lane);
    if (it == s.lane_graph.successors.end()) continue;
    const Polyline * poly = s.find_polyline(lane);
    const double len = lane == *start ? start_remaining : polyline_length(poly->points);
    for (int next : it->second) {
      const double nd = d + len;
      if (nd > budget) continue;
      const auto found = dist.find(next);
      if (found == dist.end() || nd < found->second) {
        dist[next] = nd;
        frontier.push({nd, next});
      }
    }
  }

  std::vector<std::pair<double, int>> order;
  for (const auto & [lane, d] : dist) order.push_back({d, lane});
  std::sort(order.begin(), order.end());

  const bool stationary = command && *command == Command::Stationary;
  const Frame frame{cur.x, cur.y, cur.heading};
  for (const auto & [d, lane] : order) {
    if (out.lanes.size() >= options.max_lanes) break;
    if (stationary && lane != *start) continue;
    const Polyline * poly = s.find_polyline(lane);
    if (command && !stationary) {
      const double bearing = wrap_angle(terminal_bearing(poly->points) - cur.heading);
      if (!in_sector(*command, bearing)) continue;
    }
    ReachableLane rl;
    rl.lane_id = lane;
    rl.path_distance = d;
    const std::size_t n = std::min(options.max_points, poly->points.size());
    for (std::size_t i = 0; i < n; ++i) {
      MapPoint p = poly->points[i];
      frame.to_local(p.x, p.y, p.x, p.y);
      p.direction = frame.heading_to_local(p.direction);
      rl.points.push_back(p);
    }
    out.lanes.push_back(std::move(rl));
  }
  return out;
}

}  // namespace trajplan::scenario
