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


#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>

#include "doctest.h"
#include "trajplan/kinematics.hpp"
#include "trajplan/scenario.hpp"

namespace sc = trajplan::scenario;
using trajplan::Command;

namespace
{

struct Projection
{
  double along = 0.0;
  double dist = std::numeric_limits<double>::infinity();
};

Projection project_oracle(const std::vector<sc::MapPoint> & pts, double x, double y)
{
  Projection best;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double ax = pts[i].x, ay = pts[i].y;
    const double dx = pts[i + 1].x - ax, dy = pts[i + 1].y - ay;
    const double len2 = dx * dx + dy * dy;
    const double u = len2 > 0 ? std::clamp(((x - ax) * dx + (y - ay) * dy) / len2, 0.0, 1.0) : 0.0;
    const double d = std::hypot(ax + u * dx - x, ay + u * dy - y);
    if (d < best.dist) best = {acc + u * std::sqrt(len2), d};
    acc += std::sqrt(len2);
  }
  return best;
}

double length_oracle(const std::vector<sc::MapPoint> & pts)
{
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    acc += std::hypot(pts[i + 1].x - pts[i].x, pts[i + 1].y - pts[i].y);
  }
  return acc;
}

// Bellman-Ford over the lane graph with the same budget rule.
std::map<int, double> reachable_oracle(const sc::Scenario & s, int agent, int start)
{
  const auto & cur = s.find_agent(agent)->states[static_cast<std::size_t>(s.current_step())];
  const double budget = std::hypot(cur.vx, cur.vy) * s.future_steps * s.dt + 20.0;
  const auto & sp = s.find_polyline(start)->points;
  const double start_len = length_oracle(sp) - project_oracle(sp, cur.x, cur.y).along;
  std::map<int, double> d{{start, 0.0}};
  for (std::size_t round = 0; round < s.map.size() + 1; ++round) {
    for (const auto & [lane, succ] : s.lane_graph.successors) {
      const auto it = d.find(lane);
      if (it == d.end()) continue;
      const double len = lane == start ? start_len : length_oracle(s.find_polyline(lane)->points);
      for (int n : succ) {
        const double nd = it->second + len;
        if (nd > budget) continue;
        if (!d.count(n) || nd < d[n]) d[n] = nd;
      }
    }
  }
  return d;
}

double heading_change(const sc::AgentTrack & a, int current)
{
  double total = 0.0;
  double prev = a.states[static_cast<std::size_t>(current)].heading;
  for (std::size_t i = static_cast<std::size_t>(current) + 1; i < a.states.size(); ++i) {
    if (!a.states[i].valid) continue;
    total += trajplan::kinematics::wrap_angle(a.states[i].heading - prev);
    prev = a.states[i].heading;
  }
  return total;
}

}  // namespace

TEST_CASE("generation is deterministic")
{
  for (auto layout : {sc::Layout::Straight, sc::Layout::Curve, sc::Layout::FourWay}) {
    const auto a = sc::to_json_line(sc::generate(17, layout, 6));
    const auto b = sc::to_json_line(sc::generate(17, layout, 6));
    CHECK(a == b);
    CHECK(a != sc::to_json_line(sc::generate(18, layout, 6)));
  }
}

TEST_CASE("single agent on a straight road keeps its lane")
{
  const auto s = sc::generate(1, sc::Layout::Straight, 1);
  REQUIRE(s.agents.size() == 1);
  const auto & a = s.agents[0];
  const double y0 = a.states[0].y;
  for (const auto & st : a.states) {
    REQUIRE(st.valid);
    CHECK(std::abs(st.y - y0) < 1e-9);
  }
  CHECK(s.command_labels.at(a.id) == Command::Straight);
}

TEST_CASE("forced left turn bends by more than 30 degrees")
{
  sc::GeneratorOptions opt;
  opt.ego_maneuver = sc::Maneuver::LeftTurn;
  const auto s = sc::generate(2, sc::Layout::FourWay, 4, opt);
  const auto & ego = *s.find_agent(s.ego_id);
  CHECK(heading_change(ego, s.current_step()) > 30.0 * std::numbers::pi / 180.0);
  CHECK(s.command_labels.at(s.ego_id) == Command::LeftTurn);
}

TEST_CASE("generated scenes validate and have no overlapping agents at the current step")
{
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    for (auto layout : {sc::Layout::Straight, sc::Layout::Curve, sc::Layout::FourWay}) {
      const auto s = sc::generate(seed, layout, 8);
      CHECK_NOTHROW(sc::validate(s));
      CHECK(s.find_agent(s.ego_id) != nullptr);
      CHECK(!s.interest_ids.empty());
    }
  }
}

TEST_CASE("generator rejects layouts that cannot fit the agents")
{
  CHECK_THROWS_AS(sc::generate(0, sc::Layout::Straight, 500), sc::ScenarioError);
}

TEST_CASE("agent frame: documented example")
{
  const sc::Frame f{10.0, 0.0, std::numbers::pi / 2};
  double lx, ly;
  f.to_local(10.0, 1.0, lx, ly);
  CHECK(lx == doctest::Approx(1.0));
  CHECK(std::abs(ly) < 1e-12);
}

TEST_CASE("agent frame round-trips and preserves distances")
{
  const auto s = sc::generate(4, sc::Layout::FourWay, 6);
  for (int id : s.interest_ids) {
    const auto view = sc::to_agent_frame(s, id);
    const auto & me = view.scene.find_agent(id)->states[static_cast<std::size_t>(s.current_step())];
    CHECK(std::abs(me.x) < 1e-9);
    CHECK(std::abs(me.y) < 1e-9);
    CHECK(std::abs(me.heading) < 1e-9);
    const auto back = sc::from_agent_frame(view);
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
      for (std::size_t k = 0; k < s.agents[i].states.size(); ++k) {
        const auto & a = s.agents[i].states[k];
        const auto & b = back.agents[i].states[k];
        if (!a.valid) continue;
        CHECK(std::abs(a.x - b.x) < 1e-9);
        CHECK(std::abs(a.y - b.y) < 1e-9);
        CHECK(std::abs(trajplan::kinematics::wrap_angle(a.heading - b.heading)) < 1e-9);
        CHECK(std::abs(a.vx - b.vx) < 1e-9);
      }
    }
    const auto & p = s.agents[0].states[0];
    const auto & q = s.agents.back().states.back();
    const auto & lp = view.scene.agents[0].states[0];
    const auto & lq = view.scene.agents.back().states.back();
    if (p.valid && q.valid) {
      CHECK(std::hypot(p.x - q.x, p.y - q.y) ==
            doctest::Approx(std::hypot(lp.x - lq.x, lp.y - lq.y)).epsilon(1e-12));
    }
  }
}

TEST_CASE("to_agent_frame rejects unknown agents")
{
  const auto s = sc::generate(4, sc::Layout::Straight, 2);
  CHECK_THROWS_AS(sc::to_agent_frame(s, 999), sc::ScenarioError);
}

TEST_CASE("reachable lanes match a Bellman-Ford oracle")
{
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    for (auto layout : {sc::Layout::Straight, sc::Layout::Curve, sc::Layout::FourWay}) {
      const auto s = sc::generate(seed, layout, 5);
      const auto start = sc::nearest_lane(s, s.ego_id);
      REQUIRE(start.has_value());
      sc::ReachableOptions opt;
      opt.max_lanes = 1000;
      const auto got = sc::reachable_lanes(s, s.ego_id, std::nullopt, opt);
      const auto want = reachable_oracle(s, s.ego_id, *start);
      REQUIRE(got.lanes.size() == want.size());
      double prev = -1.0;
      for (const auto & l : got.lanes) {
        REQUIRE(want.count(l.lane_id) == 1);
        CHECK(l.path_distance == doctest::Approx(want.at(l.lane_id)).epsilon(1e-9));
        CHECK(l.path_distance >= prev);
        prev = l.path_distance;
        CHECK(l.points.size() <= opt.max_points);
      }
      const auto capped = sc::reachable_lanes(s, s.ego_id, std::nullopt);
      CHECK(capped.lanes.size() <= 16);
    }
  }
}

TEST_CASE("reachable lanes follow the command")
{
  sc::GeneratorOptions opt;
  opt.ego_maneuver = sc::Maneuver::LeftTurn;
  const auto s = sc::generate(2, sc::Layout::FourWay, 3, opt);
  const auto left = sc::reachable_lanes(s, s.ego_id, Command::LeftTurn);
  const auto right = sc::reachable_lanes(s, s.ego_id, Command::RightTurn);
  REQUIRE(!left.lanes.empty());
  REQUIRE(!right.lanes.empty());
  for (const auto & l : left.lanes) {
    const auto & a = l.points[l.points.size() - 2];
    const auto & b = l.points.back();
    CHECK(std::atan2(b.y - a.y, b.x - a.x) > 0.0);
  }
  for (const auto & l : right.lanes) {
    const auto & a = l.points[l.points.size() - 2];
    const auto & b = l.points.back();
    CHECK(std::atan2(b.y - a.y, b.x - a.x) < 0.0);
  }
  const auto stop = sc::reachable_lanes(s, s.ego_id, Command::Stationary);
  REQUIRE(stop.lanes.size() == 1);
  CHECK(stop.lanes[0].lane_id == *sc::nearest_lane(s, s.ego_id));
}

TEST_CASE("scenario JSON round trip")
{
  const auto s = sc::generate(8, sc::Layout::FourWay, 5);
  const auto line = sc::to_json_line(s);
  CHECK(sc::to_json_line(sc::from_json_line(line)) == line);

  const auto path = std::filesystem::temp_directory_path() / "trajplan_test_scenes.jsonl";
  sc::save(std::vector<sc::Scenario>{s, sc::generate(9, sc::Layout::Curve, 3)}, path.string());
  const auto loaded = sc::load(path.string());
  REQUIRE(loaded.size() == 2);
  CHECK(sc::to_json_line(loaded[0]) == line);
  std::filesystem::remove(path);
}

TEST_CASE("malformed scenario lines report the location")
{
  const auto line = sc::to_json_line(sc::generate(8, sc::Layout::Straight, 2));
  try {
    sc::from_json_line(line.substr(0, line.size() / 2), 7);
    FAIL("expected an error");
  } catch (const sc::ScenarioError & e) {
    CHECK(std::string(e.what()).find("line 7") != std::string::npos);
  }
  std::string missing = line;
  const auto pos = missing.find("\"future_steps\"");
  REQUIRE(pos != std::string::npos);
  missing.replace(pos, 14, "\"future_stepz\"");
  try {
    sc::from_json_line(missing, 3);
    FAIL("expected an error");
  } catch (const sc::ScenarioError & e) {
    const std::string what = e.what();
    CHECK(what.find("line 3") != std::string::npos);
    CHECK(what.find("future_steps") != std::string::npos);
  }
}
