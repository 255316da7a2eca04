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


#include <algorithm>
#include <cmath>
#include <numbers>

#include "trajplan/commands.hpp"
#include "trajplan/geometry.hpp"
#include "trajplan/rng.hpp"
#include "trajplan/scenario.hpp"

namespace trajplan::scenario
{
namespace
{

using P = kinematics::Point2;
constexpr double kPi = std::numbers::pi;
constexpr double kLaneWidth = 3.5;
constexpr double kLaneSpacing = 1.0;
constexpr double kLineSpacing = 3.0;
constexpr std::size_t kMaxPoints = 20;

std::vector<P> line(P a, P b, double spacing)
{
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  const int n = std::max(1, static_cast<int>(std::ceil(len / spacing - 1e-9)));
  std::vector<P> out;
  for (int i = 0; i <= n; ++i) {
    const double u = static_cast<double>(i) / n;
    out.push_back({a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)});
  }
  return out;
}

// Points c + r (cos a, sin a) for a from a0 to a1.
std::vector<P> arc(P c, double r, double a0, double a1, double spacing)
{
  const int n = std::max(1, static_cast<int>(std::ceil(r * std::abs(a1 - a0) / spacing - 1e-9)));
  std::vector<P> out;
  for (int i = 0; i <= n; ++i) {
    const double a = a0 + (a1 - a0) * static_cast<double>(i) / n;
    out.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
  }
  return out;
}

std::vector<P> join(std::vector<P> a, const std::vector<P> & b)
{
  if (!a.empty() && !b.empty() && std::hypot(a.back().x - b.front().x, a.back().y - b.front().y) < 1e-9) {
    a.insert(a.end(), b.begin() + 1, b.end());
  } else {
    a.insert(a.end(), b.begin(), b.end());
  }
  return a;
}

std::vector<P> rotated(const std::vector<P> & pts, double angle)
{
  std::vector<P> out;
  out.reserve(pts.size());
  for (const auto & p : pts) out.push_back(kinematics::rotate(p, angle));
  return out;
}

std::vector<P> reversed(std::vector<P> pts)
{
  std::reverse(pts.begin(), pts.end());
  return pts;
}

std::vector<MapPoint> with_directions(const std::vector<P> & pts)
{
  std::vector<MapPoint> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::size_t a = i + 1 < pts.size() ? i : i - 1;
    out[i] = {pts[i].x, pts[i].y, std::atan2(pts[a + 1].y - pts[a].y, pts[a + 1].x - pts[a].x)};
  }
  return out;
}

class MapBuilder
{
public:
  explicit MapBuilder(Scenario & s) : s_(s) {}

  // Chops a dense centerline into linked lane polylines.
  std::vector<int> lane(const std::vector<P> & dense)
  {
    std::vector<int> ids = add(PolylineKind::LaneCenter, dense);
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) link(ids[i], ids[i + 1]);
    for (int id : ids) s_.lane_graph.successors[id];
    return ids;
  }

  void line_feature(PolylineKind kind, const std::vector<P> & dense) { add(kind, dense); }

  void link(int from, int to) { s_.lane_graph.successors[from].push_back(to); }

private:
  std::vector<int> add(PolylineKind kind, const std::vector<P> & dense)
  {
    std::vector<int> ids;
    std::size_t start = 0;
    while (start + 1 < dense.size()) {
      const std::size_t end = std::min(start + kMaxPoints - 1, dense.size() - 1);
      Polyline p;
      p.id = next_id_++;
      p.kind = kind;
      p.points = with_directions(std::vector<P>(dense.begin() + static_cast<std::ptrdiff_t>(start),
                                                dense.begin() + static_cast<std::ptrdiff_t>(end) + 1));
      s_.map.push_back(std::move(p));
      ids.push_back(next_id_ - 1);
      start = end;
    }
    return ids;
  }

  Scenario & s_;
  int next_id_ = 0;
};

struct RouteDef
{
  std::vector<int> lanes;
  std::vector<P> path;
  Maneuver maneuver = Maneuver::Straight;
  double stop_s = 0.0;  // arc length where the approach ends
  bool stop_allowed = false;
};

struct LayoutDef
{
  std::vector<RouteDef> routes;
  std::vector<std::vector<P>> walkways;
  double ego_min = 0.0;
  double ego_max = 0.0;
  double spawn_min = 0.0;
  double spawn_max = 0.0;
};

std::vector<P> lane_points(const Scenario & s, const std::vector<int> & ids)
{
  std::vector<P> out;
  for (int id : ids) {
    std::vector<P> pts;
    for (const auto & mp : s.find_polyline(id)->points) pts.push_back({mp.x, mp.y});
    out = join(std::move(out), pts);
  }
  return out;
}

double path_length(const std::vector<P> & pts)
{
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);
  return len;
}

LayoutDef build_straight(Scenario & s)
{
  MapBuilder mb(s);
  LayoutDef def;
  const double half = 50.0;
  for (double y : {-1.75, -5.25}) {
    RouteDef r;
    r.lanes = mb.lane(line({-half, y}, {half, y}, kLaneSpacing));
    r.stop_allowed = true;
    def.routes.push_back(std::move(r));
  }
  for (double y : {1.75, 5.25}) {
    RouteDef r;
    r.lanes = mb.lane(line({half, y}, {-half, y}, kLaneSpacing));
    r.stop_allowed = true;
    def.routes.push_back(std::move(r));
  }
  for (double y : {-kLaneWidth, 0.0, kLaneWidth}) {
    mb.line_feature(PolylineKind::LaneSeparator, line({-half, y}, {half, y}, kLineSpacing));
  }
  for (double y : {-2 * kLaneWidth, 2 * kLaneWidth}) {
    mb.line_feature(PolylineKind::RoadBorder, line({-half, y}, {half, y}, kLineSpacing));
  }
  mb.line_feature(PolylineKind::Crosswalk, line({20.0, -7.5}, {20.0, 7.5}, kLaneSpacing));
  def.walkways.push_back(line({20.0, -12.0}, {20.0, 12.0}, kLaneSpacing));
  def.ego_min = 20.0;
  def.ego_max = 30.0;
  def.spawn_min = 12.0;
  def.spawn_max = 65.0;
  return def;
}

LayoutDef build_curve(Scenario & s)
{
  MapBuilder mb(s);
  LayoutDef def;
  const double radius = 50.0;
  const P center{0.0, radius};
  // Lead-in along +x, a 90 degree left bend, then a short run north.
  const auto road = [&](double off, double spacing) {
    std::vector<P> pts = line({-40.0, -off}, {0.0, -off}, spacing);
    pts = join(std::move(pts), arc(center, radius + off, -kPi / 2, 0.0, spacing));
    return join(std::move(pts), line({radius + off, radius}, {radius + off, radius + 20.0}, spacing));
  };
  {
    RouteDef r;
    r.lanes = mb.lane(road(1.75, kLaneSpacing));
    r.stop_allowed = true;
    def.routes.push_back(std::move(r));
  }
  {
    RouteDef r;
    r.lanes = mb.lane(reversed(road(-1.75, kLaneSpacing)));
    r.stop_allowed = true;
    def.routes.push_back(std::move(r));
  }
  mb.line_feature(PolylineKind::LaneSeparator, road(0.0, kLineSpacing));
  mb.line_feature(PolylineKind::RoadBorder, road(kLaneWidth, kLineSpacing));
  mb.line_feature(PolylineKind::RoadBorder, road(-kLaneWidth, kLineSpacing));
  def.ego_min = 20.0;
  def.ego_max = 35.0;
  def.spawn_min = 12.0;
  def.spawn_max = 70.0;
  return def;
}

LayoutDef build_four_way(Scenario & s)
{
  MapBuilder mb(s);
  LayoutDef def;
  const double stop = 8.0;
  const double arm = 50.0;
  const double lane = kLaneWidth / 2;
  // Geometry of the west arm; the others are rotations by -90 degrees each.
  const std::vector<P> inbound = line({-stop - arm, -lane}, {-stop, -lane}, kLaneSpacing);
  const std::vector<P> outbound = line({-stop, lane}, {-stop - arm, lane}, kLaneSpacing);
  const std::vector<P> left = arc({-stop, stop}, stop + lane, -kPi / 2, 0.0, kLaneSpacing);
  const std::vector<P> straight = line({-stop, -lane}, {stop, -lane}, kLaneSpacing);
  const std::vector<P> right = arc({-stop, -stop}, stop - lane, kPi / 2, 0.0, kLaneSpacing);

  std::array<std::vector<int>, 4> in_ids, out_ids;
  for (int k = 0; k < 4; ++k) {
    const double rot = -kPi / 2 * k;
    in_ids[k] = mb.lane(rotated(inbound, rot));
    out_ids[k] = mb.lane(rotated(outbound, rot));
  }
  for (int k = 0; k < 4; ++k) {
    const double rot = -kPi / 2 * k;
    const std::array<std::pair<const std::vector<P> *, Maneuver>, 3> turns = {{
      {&left, Maneuver::LeftTurn}, {&straight, Maneuver::Straight}, {&right, Maneuver::RightTurn}}};
    for (int m = 0; m < 3; ++m) {
      const std::vector<int> conn = mb.lane(rotated(*turns[m].first, rot));
      mb.link(in_ids[k].back(), conn.front());
      const int exit_arm = (k + 1 + m) % 4;
      mb.link(conn.back(), out_ids[exit_arm].front());
      RouteDef r;
      r.lanes = in_ids[k];
      r.lanes.insert(r.lanes.end(), conn.begin(), conn.end());
      r.lanes.insert(r.lanes.end(), out_ids[exit_arm].begin(), out_ids[exit_arm].end());
      r.maneuver = turns[m].second;
      r.stop_s = arm;
      r.stop_allowed = turns[m].second == Maneuver::Straight;
      def.routes.push_back(std::move(r));
    }
    for (double y : {-kLaneWidth, kLaneWidth}) {
      mb.line_feature(PolylineKind::RoadBorder,
                      rotated(line({-stop - 1.0, y}, {-stop - arm, y}, kLineSpacing), rot));
    }
    mb.line_feature(PolylineKind::Crosswalk,
                    rotated(line({-stop - 3.0, -kLaneWidth - 1.0}, {-stop - 3.0, kLaneWidth + 1.0}, kLaneSpacing), rot));
    def.walkways.push_back(rotated(line({-stop - 3.0, -12.0}, {-stop - 3.0, 12.0}, kLaneSpacing), rot));
  }
  def.ego_min = arm - 8.0;
  def.ego_max = arm - 2.0;
  def.spawn_min = 15.0;
  def.spawn_max = arm + 6.0;
  return def;
}

struct PathSample
{
  double x, y, heading;
};

// Position on a polyline path at arc length `s`, heading of the segment.
bool sample_path(const std::vector<P> & pts, const std::vector<double> & cum, double s, PathSample & out)
{
  if (s < 0.0 || s > cum.back() || pts.size() < 2) return false;
  std::size_t i = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), s) - cum.begin());
  i = std::clamp<std::size_t>(i, 1, pts.size() - 1);
  const double seg = cum[i] - cum[i - 1];
  const double u = seg > 0.0 ? (s - cum[i - 1]) / seg : 0.0;
  out.x = pts[i - 1].x + u * (pts[i].x - pts[i - 1].x);
  out.y = pts[i - 1].y + u * (pts[i].y - pts[i - 1].y);
  out.heading = std::atan2(pts[i].y - pts[i - 1].y, pts[i].x - pts[i - 1].x);
  return true;
}

std::vector<double> cumulative(const std::vector<P> & pts)
{
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    cum[i] = cum[i - 1] + std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);
  }
  return cum;
}

struct Motion
{
  std::size_t route = 0;  // index into routes, or walkway when pedestrian
  double s_current = 0.0;
  double v0 = 0.0;
  double accel = 0.0;
  double length = 0.0;
  double width = 0.0;
  AgentType type = AgentType::Vehicle;
};

std::vector<double> speeds(const Motion & m, int steps, int current, double dt)
{
  std::vector<double> v(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    const double tt = (t - current) * dt;
    v[static_cast<std::size_t>(t)] = m.v0 == 0.0 ? 0.0 : std::clamp(m.v0 + m.accel * tt, 0.5, 15.0);
  }
  return v;
}

// Arc length per step, anchored so that step `current` sits at s_current.
std::vector<double> arc_lengths(const Motion & m, int steps, int current, double dt)
{
  const auto v = speeds(m, steps, current, dt);
  std::vector<double> s(static_cast<std::size_t>(steps));
  s[static_cast<std::size_t>(current)] = m.s_current;
  for (int t = current + 1; t < steps; ++t) {
    s[static_cast<std::size_t>(t)] = s[static_cast<std::size_t>(t - 1)] + v[static_cast<std::size_t>(t)] * dt;
  }
  for (int t = current - 1; t >= 0; --t) {
    s[static_cast<std::size_t>(t)] = s[static_cast<std::size_t>(t + 1)] - v[static_cast<std::size_t>(t + 1)] * dt;
  }
  return s;
}

AgentTrack realize(int id, const Motion & m, const std::vector<P> & path, int steps, int current, double dt)
{
  AgentTrack tr;
  tr.id = id;
  tr.type = m.type;
  tr.states.resize(static_cast<std::size_t>(steps));
  const auto cum = cumulative(path);
  const auto s = arc_lengths(m, steps, current, dt);
  const auto v = speeds(m, steps, current, dt);
  for (int t = 0; t < steps; ++t) {
    PathSample ps{};
    auto & st = tr.states[static_cast<std::size_t>(t)];
    if (!sample_path(path, cum, s[static_cast<std::size_t>(t)], ps)) continue;
    st.x = ps.x;
    st.y = ps.y;
    st.heading = kinematics::wrap_angle(ps.heading);
    st.vx = v[static_cast<std::size_t>(t)] * std::cos(ps.heading);
    st.vy = v[static_cast<std::size_t>(t)] * std::sin(ps.heading);
    st.length = m.length;
    st.width = m.width;
    st.valid = true;
  }
  return tr;
}

bool collides(const AgentTrack & a, const AgentTrack & b)
{
  for (std::size_t t = 0; t < a.states.size(); ++t) {
    const auto & sa = a.states[t];
    const auto & sb = b.states[t];
    if (!sa.valid || !sb.valid) continue;
    if (geometry::boxes_intersect({sa.x, sa.y, sa.heading, sa.length, sa.width},
                                  {sb.x, sb.y, sb.heading, sb.length, sb.width})) {
      return true;
    }
  }
  return false;
}

bool usable(const AgentTrack & tr, int current)
{
  const auto & st = tr.states;
  if (!st[static_cast<std::size_t>(current)].valid) return false;
  return static_cast<std::size_t>(current) + 1 < st.size() && st[static_cast<std::size_t>(current) + 1].valid;
}

}  // namespace

Scenario generate(std::uint64_t seed, Layout layout, int n_agents, const GeneratorOptions & options)
{
  if (n_agents < 1) throw ScenarioError("generate: n_agents must be at least 1");
  if (options.history_steps < 1 || options.future_steps < 1 || !(options.dt > 0.0)) {
    throw ScenarioError("generate: invalid time grid");
  }
  if (options.ego_maneuver && layout != Layout::FourWay &&
      (*options.ego_maneuver == Maneuver::LeftTurn || *options.ego_maneuver == Maneuver::RightTurn)) {
    throw ScenarioError("generate: turning ego maneuvers need the four_way layout");
  }
  Scenario s;
  s.name = std::string(layout_name(layout)) + "-" + std::to_string(seed);
  s.dt = options.dt;
  s.history_steps = options.history_steps;
  s.future_steps = options.future_steps;

  LayoutDef def;
  switch (layout) {
    case Layout::Straight: def = build_straight(s); break;
    case Layout::Curve: def = build_curve(s); break;
    case Layout::FourWay: def = build_four_way(s); break;
  }
  for (auto & r : def.routes) r.path = lane_points(s, r.lanes);

  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(layout)));
  const int steps = s.total_steps();
  const int current = s.current_step();
  std::vector<Motion> motions;

  const auto routes_with = [&](Maneuver m) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < def.routes.size(); ++i) {
      if (def.routes[i].maneuver == m) idx.push_back(i);
    }
    return idx;
  };

  constexpr int kAttempts = 400;
  for (int i = 0; i < n_agents; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
      Motion m;
      const std::vector<P> * path = nullptr;
      if (i == 0) {
        Maneuver man = Maneuver::Straight;
        if (options.ego_maneuver) {
          man = *options.ego_maneuver;
        } else if (layout == Layout::FourWay) {
          const Maneuver pick[3] = {Maneuver::LeftTurn, Maneuver::Straight, Maneuver::RightTurn};
          man = pick[rng.index(3)];
        }
        const Maneuver route_man = man == Maneuver::Stop ? Maneuver::Straight : man;
        const auto candidates = routes_with(route_man);
        m.route = layout == Layout::Straight ? 0 : candidates[rng.index(candidates.size())];
        m.type = AgentType::Vehicle;
        m.length = rng.uniform(4.3, 4.9);
        m.width = rng.uniform(1.8, 2.0);
        m.s_current = rng.uniform(def.ego_min, def.ego_max);
        m.v0 = man == Maneuver::Stop ? 0.0 : rng.uniform(5.5, 8.0);
        m.accel = man == Maneuver::Stop ? 0.0 : rng.uniform(-0.2, 0.2);
        path = &def.routes[m.route].path;
      } else {
        const double u = rng.uniform();
        const bool ped_ok = !def.walkways.empty();
        if (ped_ok && u < 0.12) {
          m.type = AgentType::Pedestrian;
          m.route = rng.index(def.walkways.size());
          const bool flip = rng.bernoulli(0.5);
          m.length = rng.uniform(0.5, 0.8);
          m.width = rng.uniform(0.5, 0.8);
          m.v0 = rng.uniform(1.0, 1.6);
          m.accel = 0.0;
          m.s_current = rng.uniform(2.0, 9.0);
          // Odd walkway slot means the reversed direction.
          m.route = m.route * 2 + (flip ? 1 : 0);
        } else if (u < (ped_ok ? 0.22 : 0.1)) {
          m.type = AgentType::Cyclist;
          m.route = rng.index(def.routes.size());
          m.length = rng.uniform(1.6, 1.9);
          m.width = rng.uniform(0.6, 0.8);
          m.v0 = rng.uniform(3.0, 5.0);
          m.accel = rng.uniform(-0.1, 0.1);
          m.s_current = rng.uniform(def.spawn_min, def.spawn_max);
        } else {
          m.type = AgentType::Vehicle;
          m.length = rng.uniform(4.2, 5.0);
          m.width = rng.uniform(1.8, 2.0);
          const bool follow = !motions.empty() && rng.bernoulli(0.35);
          const Motion * lead = follow ? &motions[rng.index(motions.size())] : nullptr;
          if (lead && lead->type == AgentType::Vehicle) {
            // Tight following behind an already placed vehicle.
            m.route = lead->route;
            m.v0 = lead->v0;
            m.accel = lead->accel;
            const double gap = lead->v0 == 0.0 ? rng.uniform(0.5, 1.5) : rng.uniform(1.0, 3.0);
            m.s_current = lead->s_current - 0.5 * (lead->length + m.length) - gap;
          } else {
            m.route = rng.index(def.routes.size());
            const bool stop = def.routes[m.route].stop_allowed && rng.bernoulli(0.15);
            if (stop) {
              m.v0 = 0.0;
              m.accel = 0.0;
              const double limit = layout == Layout::FourWay ? def.routes[m.route].stop_s - 6.0 - 0.5 * m.length
                                                               : def.spawn_max;
              m.s_current = rng.uniform(std::max(def.spawn_min, limit - 25.0), limit);
            } else {
              const bool turning = def.routes[m.route].maneuver != Maneuver::Straight;
              m.v0 = turning ? rng.uniform(4.5, 7.5) : rng.uniform(5.0, 9.0);
              m.accel = rng.uniform(-0.3, 0.3);
              m.s_current = rng.uniform(def.spawn_min, def.spawn_max);
            }
          }
        }
      }

      std::vector<P> walk;
      if (m.type == AgentType::Pedestrian) {
        walk = def.walkways[m.route / 2];
        if (m.route % 2) walk = reversed(walk);
        path = &walk;
      } else if (!path) {
        path = &def.routes[m.route].path;
      }
      const auto s_arc = arc_lengths(m, steps, current, s.dt);
      if (s_arc.front() < 0.0 || m.s_current > path_length(*path)) continue;
      AgentTrack tr = realize(i, m, *path, steps, current, s.dt);
      if (!usable(tr, current)) continue;
      bool clash = false;
      for (const auto & other : s.agents) {
        if (collides(tr, other)) {
          clash = true;
          break;
        }
      }
      if (clash) continue;
      s.agents.push_back(std::move(tr));
      motions.push_back(m);
      placed = true;
    }
    if (!placed) {
      throw ScenarioError("generate: layout " + std::string(layout_name(layout)) + " cannot fit " +
                          std::to_string(n_agents) + " agents (placed " + std::to_string(i) + ")");
    }
  }

  s.ego_id = 0;
  for (const auto & a : s.agents) {
    if (static_cast<int>(s.interest_ids.size()) >= options.max_interest) break;
    s.interest_ids.push_back(a.id);
  }
  commands::label_scenario(s);
  validate(s);
  return s;
}

}  // namespace trajplan::scenario
