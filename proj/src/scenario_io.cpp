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


#include <fstream>
#include <sstream>

#include "json.hpp"
#include "trajplan/scenario.hpp"

namespace trajplan::scenario
{
namespace
{

using nlohmann::json;

constexpr const char * kFormat = "trajplan-scenario";
constexpr int kVersion = 1;

class FieldReader
{
public:
  explicit FieldReader(std::size_t line) : line_(line) {}

  const json & at(const json & j, const char * field, const std::string & where) const
  {
    if (!j.is_object() || !j.contains(field)) {
      throw ScenarioError("line " + std::to_string(line_) + ": missing field '" + field + "'" +
                          (where.empty() ? "" : " in " + where));
    }
    return j.at(field);
  }

  [[noreturn]] void fail(const std::string & what) const
  {
    throw ScenarioError("line " + std::to_string(line_) + ": " + what);
  }

private:
  std::size_t line_;
};

}  // namespace

std::string to_json_line(const Scenario & s)
{
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["name"] = s.name;
  j["dt"] = s.dt;
  j["history_steps"] = s.history_steps;
  j["future_steps"] = s.future_steps;
  j["ego_id"] = s.ego_id;
  j["interest_ids"] = s.interest_ids;
  json agents = json::array();
  for (const auto & a : s.agents) {
    json states = json::array();
    for (const auto & st : a.states) {
      states.push_back({st.x, st.y, st.heading, st.vx, st.vy, st.length, st.width, st.valid ? 1 : 0});
    }
    agents.push_back({{"id", a.id}, {"type", agent_type_name(a.type)}, {"states", std::move(states)}});
  }
  j["agents"] = std::move(agents);
  json map = json::array();
  for (const auto & p : s.map) {
    json pts = json::array();
    for (const auto & pt : p.points) pts.push_back({pt.x, pt.y, pt.direction});
    map.push_back({{"id", p.id}, {"kind", polyline_kind_name(p.kind)}, {"points", std::move(pts)}});
  }
  j["map"] = std::move(map);
  json succ = json::array();
  for (const auto & [lane, next] : s.lane_graph.successors) succ.push_back({lane, next});
  j["successors"] = std::move(succ);
  json cmds = json::array();
  for (const auto & [id, c] : s.command_labels) cmds.push_back({id, command_name(c)});
  j["commands"] = std::move(cmds);
  return j.dump();
}

Scenario from_json_line(std::string_view line, std::size_t line_number)
{
  const FieldReader r(line_number);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error & e) {
    r.fail(std::string("malformed JSON: ") + e.what());
  }
  Scenario s;
  try {
    if (r.at(j, "format", "").get<std::string>() != kFormat) r.fail("not a scenario record");
    const int version = r.at(j, "version", "").get<int>();
    if (version != kVersion) r.fail("unsupported scenario version " + std::to_string(version));
    s.name = r.at(j, "name", "").get<std::string>();
    s.dt = r.at(j, "dt", "").get<double>();
    s.history_steps = r.at(j, "history_steps", "").get<int>();
    s.future_steps = r.at(j, "future_steps", "").get<int>();
    s.ego_id = r.at(j, "ego_id", "").get<int>();
    s.interest_ids = r.at(j, "interest_ids", "").get<std::vector<int>>();
    for (const auto & ja : r.at(j, "agents", "")) {
      AgentTrack a;
      a.id = r.at(ja, "id", "agent").get<int>();
      const std::string where = "agent " + std::to_string(a.id);
      const auto type = parse_agent_type(r.at(ja, "type", where).get<std::string>());
      if (!type) r.fail("unknown agent type in " + where);
      a.type = *type;
      for (const auto & js : r.at(ja, "states", where)) {
        if (!js.is_array() || js.size() != 8) r.fail("state of " + where + " needs 8 values");
        AgentState st;
        st.x = js[0].get<double>();
        st.y = js[1].get<double>();
        st.heading = js[2].get<double>();
        st.vx = js[3].get<double>();
        st.vy = js[4].get<double>();
        st.length = js[5].get<double>();
        st.width = js[6].get<double>();
        st.valid = js[7].get<int>() != 0;
        a.states.push_back(st);
      }
      s.agents.push_back(std::move(a));
    }
    for (const auto & jp : r.at(j, "map", "")) {
      Polyline p;
      p.id = r.at(jp, "id", "polyline").get<int>();
      const std::string where = "polyline " + std::to_string(p.id);
      const auto kind = parse_polyline_kind(r.at(jp, "kind", where).get<std::string>());
      if (!kind) r.fail("unknown polyline kind in " + where);
      p.kind = *kind;
      for (const auto & pt : r.at(jp, "points", where)) {
        if (!pt.is_array() || pt.size() != 3) r.fail("point of " + where + " needs 3 values");
        p.points.push_back({pt[0].get<double>(), pt[1].get<double>(), pt[2].get<double>()});
      }
      s.map.push_back(std::move(p));
    }
    for (const auto & e : r.at(j, "successors", "")) {
      s.lane_graph.successors[e.at(0).get<int>()] = e.at(1).get<std::vector<int>>();
    }
    for (const auto & e : r.at(j, "commands", "")) {
      const auto c = parse_command(e.at(1).get<std::string>());
      if (!c) r.fail("unknown command label");
      s.command_labels[e.at(0).get<int>()] = *c;
    }
  } catch (const json::exception & e) {
    r.fail(std::string("bad field: ") + e.what());
  }
  try {
    validate(s);
  } catch (const ScenarioError & e) {
    r.fail(e.what());
  }
  return s;
}

void save(const std::vector<Scenario> & scenes, const std::string & path)
{
  std::ofstream out(path);
  if (!out) throw ScenarioError("cannot write " + path);
  for (const auto & s : scenes) out << to_json_line(s) << '\n';
  if (!out) throw ScenarioError("write failed for " + path);
}

void save(const Scenario & scene, const std::string & path) { save(std::vector<Scenario>{scene}, path); }

std::vector<Scenario> load(const std::string & path)
{
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open " + path);
  std::vector<Scenario> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(from_json_line(line, n));
  }
  return out;
}

}  // namespace trajplan::scenario
