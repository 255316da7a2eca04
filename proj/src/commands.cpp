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


#include "trajplan/commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "json.hpp"
#include "trajplan/rng.hpp"

namespace trajplan::commands
{

using kinematics::wrap_angle;
using scenario::AgentType;

namespace
{

Command classify(double displacement, double heading_change, const LabelThresholds & th)
{
  const double turn = th.turn_angle_deg * std::numbers::pi / 180.0;
  if (displacement < th.stationary_displacement) return Command::Stationary;
  if (heading_change > turn) return Command::LeftTurn;
  if (heading_change < -turn) return Command::RightTurn;
  return Command::Straight;
}

}  // namespace

Command label_command(const scenario::AgentTrack & track, int current_step,
                      const LabelThresholds & thresholds)
{
  if (track.type != AgentType::Vehicle) return Command::Vru;
  const auto & st = track.states;
  const std::size_t first = static_cast<std::size_t>(std::max(current_step + 1, 0));
  std::vector<std::size_t> valid;
  for (std::size_t i = first; i < st.size(); ++i) {
    if (st[i].valid) valid.push_back(i);
  }
  if (valid.empty()) return Command::Unknown;

  const std::size_t cur = static_cast<std::size_t>(current_step);
  const auto & origin = cur < st.size() && st[cur].valid ? st[cur] : st[valid.front()];
  const auto & last = st[valid.back()];
  const double displacement = std::hypot(last.x - origin.x, last.y - origin.y);

  double change = 0.0;
  for (std::size_t i = 1; i < valid.size(); ++i) {
    change += wrap_angle(st[valid[i]].heading - st[valid[i - 1]].heading);
  }
  return classify(displacement, change, thresholds);
}

void label_scenario(scenario::Scenario & scene, const LabelThresholds & thresholds)
{
  scene.command_labels.clear();
  for (const auto & a : scene.agents) {
    scene.command_labels[a.id] = label_command(a, scene.current_step(), thresholds);
  }
}

Command command_from_route(const std::vector<Point2> & route, const LabelThresholds & thresholds)
{
  if (route.empty()) return Command::Unknown;
  const Point2 & end = route.back();
  const double displacement = std::hypot(end.x, end.y);
  double heading = 0.0;
  if (route.size() >= 2) {
    const Point2 & a = route[route.size() - 2];
    if (std::hypot(end.x - a.x, end.y - a.y) > 1e-9) heading = std::atan2(end.y - a.y, end.x - a.x);
  }
  return classify(displacement, heading, thresholds);
}

void validate(const MaskingSchedule & s)
{
  if (!(0.0 <= s.end_availability && s.end_availability <= s.start_availability &&
        s.start_availability <= 1.0)) {
    throw std::invalid_argument("masking schedule needs 0 <= end <= start <= 1");
  }
  if (s.total_epochs < 1 || s.ramp_epochs < 0 || s.ramp_epochs > s.total_epochs) {
    throw std::invalid_argument("masking schedule needs 0 <= ramp_epochs <= total_epochs");
  }
}

double availability(int epoch, const MaskingSchedule & s)
{
  validate(s);
  if (epoch < 0 || epoch >= s.total_epochs) {
    throw std::out_of_range("availability: epoch " + std::to_string(epoch) + " outside [0, " +
                            std::to_string(s.total_epochs) + ")");
  }
  const int ramp_start = s.total_epochs - s.ramp_epochs;
  if (epoch < ramp_start) return s.start_availability;
  if (s.ramp_epochs <= 1 || epoch == s.total_epochs - 1) return s.end_availability;
  const double frac = static_cast<double>(epoch - ramp_start) / (s.ramp_epochs - 1);
  return s.start_availability + (s.end_availability - s.start_availability) * frac;
}

std::map<int, Command> apply_mask(const std::map<int, Command> & commands, int epoch,
                                  const MaskingSchedule & schedule, std::uint64_t seed,
                                  int ego_id)
{
  const double keep = availability(epoch, schedule);
  std::map<int, Command> out;
  for (const auto & [id, c] : commands) {
    if (id == ego_id) {
      out[id] = c;
      continue;
    }
    Rng rng(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(epoch)),
                     static_cast<std::uint64_t>(static_cast<std::int64_t>(id))));
    out[id] = rng.bernoulli(keep) ? c : Command::Unknown;
  }
  return out;
}

// ----------------------------------------------------------------------------

namespace
{

double dist2(const Point2 & a, const Point2 & b)
{
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

Point2 mean_of(const std::vector<Point2> & pts)
{
  Point2 m;
  for (const auto & p : pts) {
    m.x += p.x;
    m.y += p.y;
  }
  m.x /= static_cast<double>(pts.size());
  m.y /= static_cast<double>(pts.size());
  return m;
}

}  // namespace

KMeansResult kmeans(const std::vector<Point2> & points, std::size_t k, std::uint64_t seed,
                    int max_iterations)
{
  if (points.empty()) throw std::invalid_argument("kmeans: empty point set");
  if (k == 0) throw std::invalid_argument("kmeans: k must be positive");
  KMeansResult res;
  const std::size_t n = points.size();
  if (n < k) {
    res.centers = points;
    const Point2 m = mean_of(points);
    res.centers.resize(k, m);
    return res;
  }

  Rng rng(seed);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.index(n);
  for (std::size_t c = 0; c < k; ++c) {
    res.centers.push_back(points[pick]);
    double far = -1.0;
    std::size_t far_idx = 0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], dist2(points[i], points[pick]));
      if (nearest[i] > far) {
        far = nearest[i];
        far_idx = i;
      }
    }
    pick = far_idx;
  }

  std::vector<std::size_t> assign(n, k);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = dist2(points[i], res.centers[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = dist2(points[i], res.centers[c]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      inertia += bd;
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    res.inertia.push_back(inertia);
    res.iterations = it + 1;
    if (!changed) break;
    std::vector<Point2> sums(k);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[assign[i]].x += points[i].x;
      sums[assign[i]].y += points[i].y;
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      res.centers[c] = {sums[c].x / static_cast<double>(counts[c]),
                        sums[c].y / static_cast<double>(counts[c])};
    }
  }
  return res;
}

IntentionPointSet cluster_intention_points(const EndpointPools & pools, std::size_t k,
                                           std::uint64_t seed)
{
  IntentionPointSet set;
  set.k = k;
  std::vector<Point2> all;
  for (const auto & pool : pools) all.insert(all.end(), pool.begin(), pool.end());
  for (Command c : {Command::LeftTurn, Command::Straight, Command::RightTurn,
                    Command::Stationary}) {
    const auto & pool = pools[command_index(c)];
    if (pool.empty()) {
      throw std::invalid_argument("cluster_intention_points: empty pool for command " +
                                  std::string(command_name(c)));
    }
    set.points[command_index(c)] = kmeans(pool, k, mix_seed(seed, command_index(c))).centers;
  }
  if (all.empty()) throw std::invalid_argument("cluster_intention_points: no endpoints at all");
  const auto global = kmeans(all, k, mix_seed(seed, kNumCommands)).centers;
  set.points[command_index(Command::Unknown)] = global;
  set.points[command_index(Command::Vru)] = global;
  return set;
}

EndpointPools collect_endpoints(const std::vector<scenario::Scenario> & scenes)
{
  EndpointPools pools;
  for (const auto & s : scenes) {
    for (int id : s.interest_ids) {
      const auto * a = s.find_agent(id);
      if (!a || !a->states[static_cast<std::size_t>(s.current_step())].valid) continue;
      const auto lbl = s.command_labels.count(id) ? s.command_labels.at(id)
                                                  : label_command(*a, s.current_step());
      const auto view = scenario::to_agent_frame(s, id);
      const auto & st = view.scene.find_agent(id)->states;
      for (std::size_t i = st.size(); i-- > static_cast<std::size_t>(s.history_steps);) {
        if (st[i].valid) {
          pools[command_index(lbl)].push_back({st[i].x, st[i].y});
          break;
        }
      }
    }
  }
  return pools;
}

std::string to_json(const IntentionPointSet & set)
{
  nlohmann::json j;
  j["format"] = "trajplan-intention-points";
  j["version"] = 1;
  j["k"] = set.k;
  for (Command c : kAllCommands) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto & p : set.anchors(c)) pts.push_back({p.x, p.y});
    j["commands"][std::string(command_name(c))] = pts;
  }
  return j.dump();
}

IntentionPointSet intention_points_from_json(const std::string & text)
{
  IntentionPointSet set;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "trajplan-intention-points") {
      throw std::invalid_argument("not an intention point file");
    }
    set.k = j.at("k").get<std::size_t>();
    for (Command c : kAllCommands) {
      const auto & pts = j.at("commands").at(std::string(command_name(c)));
      for (const auto & p : pts) set.points[command_index(c)].push_back({p.at(0), p.at(1)});
      if (set.points[command_index(c)].size() != set.k) {
        throw std::invalid_argument("command " + std::string(command_name(c)) + " has " +
                                    std::to_string(set.points[command_index(c)].size()) +
                                    " anchors, expected " + std::to_string(set.k));
      }
    }
  } catch (const nlohmann::json::exception & e) {
    throw std::invalid_argument(std::string("intention points: ") + e.what());
  }
  return set;
}

CommandEmbeddingTable CommandEmbeddingTable::create(std::size_t dim, std::uint64_t seed)
{
  Rng rng(seed);
  std::vector<double> v(kNumCommands * dim);
  for (double & x : v) x = rng.normal();
  return {tensor::Tensor::parameter({kNumCommands, dim}, std::move(v))};
}

tensor::Tensor CommandEmbeddingTable::row(Command c) const
{
  const std::size_t i = command_index(c);
  return tensor::slice(table, 0, i, i + 1);
}

}  // namespace trajplan::commands
