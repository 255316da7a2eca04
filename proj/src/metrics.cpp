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


#include "trajplan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "trajplan/geometry.hpp"

namespace trajplan::metrics
{

using scenario::AgentState;

std::size_t GroundTruth::valid_count() const
{
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
}

GroundTruth ground_truth(const scenario::Scenario & s, int agent_id)
{
  const auto * a = s.find_agent(agent_id);
  if (!a) throw scenario::ScenarioError("unknown agent " + std::to_string(agent_id));
  GroundTruth gt;
  const std::size_t cur = static_cast<std::size_t>(s.current_step());
  const AgentState & now = a->states.at(cur);
  gt.current = {now.x, now.y};
  gt.current_heading = now.heading;
  gt.length = now.length;
  gt.width = now.width;
  for (std::size_t i = cur + 1; i < a->states.size(); ++i) {
    const AgentState & st = a->states[i];
    gt.points.push_back({st.x, st.y});
    gt.heading.push_back(st.heading);
    gt.valid.push_back(st.valid);
    if (!now.valid && st.valid && gt.length == 0.0) {
      gt.length = st.length;
      gt.width = st.width;
    }
  }
  return gt;
}

namespace
{

void check_length(const Track & mode, const GroundTruth & gt)
{
  if (mode.size() != gt.points.size()) {
    throw std::invalid_argument("track has " + std::to_string(mode.size()) + " steps, ground truth " +
                                std::to_string(gt.points.size()));
  }
}

double dist(const Point2 & a, const Point2 & b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::optional<std::size_t> last_valid(const GroundTruth & gt)
{
  for (std::size_t i = gt.valid.size(); i-- > 0;) {
    if (gt.valid[i]) return i;
  }
  return std::nullopt;
}

std::size_t top1_index(const std::vector<double> & scores)
{
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

}  // namespace

std::optional<double> min_ade(const std::vector<Track> & modes, const GroundTruth & gt)
{
  const std::size_t n = gt.valid_count();
  if (n == 0 || modes.empty()) return std::nullopt;
  double best = std::numeric_limits<double>::infinity();
  for (const Track & m : modes) {
    check_length(m, gt);
    double acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (gt.valid[i]) acc += dist(m[i], gt.points[i]);
    }
    best = std::min(best, acc / static_cast<double>(n));
  }
  return best;
}

std::optional<double> min_fde(const std::vector<Track> & modes, const GroundTruth & gt)
{
  const auto last = last_valid(gt);
  if (!last || modes.empty()) return std::nullopt;
  double best = std::numeric_limits<double>::infinity();
  for (const Track & m : modes) {
    check_length(m, gt);
    best = std::min(best, dist(m[*last], gt.points[*last]));
  }
  return best;
}

CrossAlong decompose(const Point2 & p, const GroundTruth & gt, std::size_t step)
{
  const double dx = p.x - gt.points[step].x, dy = p.y - gt.points[step].y;
  const double c = std::cos(gt.heading[step]), s = std::sin(gt.heading[step]);
  return {-s * dx + c * dy, c * dx + s * dy};
}

std::vector<MissCheckpoint> standard_checkpoints(double dt)
{
  std::vector<MissCheckpoint> cps;
  const std::array<double, 3> seconds{3.0, 5.0, 8.0};
  const std::array<double, 3> lat{1.0, 1.8, 3.0};
  const std::array<double, 3> lon{2.0, 3.6, 6.0};
  for (std::size_t i = 0; i < 3; ++i) {
    cps.push_back({static_cast<std::size_t>(std::lround(seconds[i] / dt)) - 1, lat[i], lon[i]});
  }
  return cps;
}

bool mode_hits(const Track & mode, const GroundTruth & gt,
               const std::vector<MissCheckpoint> & checkpoints)
{
  check_length(mode, gt);
  if (checkpoints.empty()) throw std::invalid_argument("mode_hits: no checkpoints");
  bool used = false;
  for (const auto & cp : checkpoints) {
    if (cp.step >= gt.points.size() || !gt.valid[cp.step]) continue;
    used = true;
    const auto e = decompose(mode[cp.step], gt, cp.step);
    if (std::abs(e.lateral) > cp.lateral || std::abs(e.longitudinal) > cp.longitudinal) return false;
  }
  if (used) return true;
  const auto last = last_valid(gt);
  if (!last) return false;
  const auto e = decompose(mode[*last], gt, *last);
  return std::abs(e.lateral) <= checkpoints[0].lateral &&
         std::abs(e.longitudinal) <= checkpoints[0].longitudinal;
}

double average_precision(std::vector<ScoredEntry> entries, std::size_t num_gt)
{
  if (num_gt == 0) return 0.0;
  std::stable_sort(entries.begin(), entries.end(),
                   [](const ScoredEntry & a, const ScoredEntry & b) { return a.score > b.score; });
  std::vector<double> precision, recall;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i;
    while (j < entries.size() && entries[j].score == entries[i].score) {
      tp += entries[j].true_positive ? 1 : 0;
      ++j;
    }
    seen = j;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(seen));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(num_gt));
    i = j;
  }
  double ap = 0.0, best = 0.0;
  for (std::size_t g = precision.size(); g-- > 0;) {
    best = std::max(best, precision[g]);
    const double r0 = g == 0 ? 0.0 : recall[g - 1];
    ap += (recall[g] - r0) * best;
  }
  return ap;
}

MissAndMap miss_and_map(const std::vector<ForecastCase> & cases,
                        const std::vector<MissCheckpoint> & checkpoints)
{
  MissAndMap out;
  std::array<std::vector<ScoredEntry>, kNumCommands> entries;
  std::array<std::size_t, kNumCommands> gts{};
  std::size_t missed = 0;
  for (const auto & c : cases) {
    if (c.gt.valid_count() == 0) continue;
    if (c.modes.size() != c.scores.size()) throw std::invalid_argument("modes and scores differ");
    ++out.agents;
    const std::size_t b = command_index(c.bucket);
    ++gts[b];
    std::optional<std::size_t> tp;
    for (std::size_t m = 0; m < c.modes.size(); ++m) {
      if (mode_hits(c.modes[m], c.gt, checkpoints) && (!tp || c.scores[m] > c.scores[*tp])) tp = m;
    }
    if (!tp) ++missed;
    for (std::size_t m = 0; m < c.modes.size(); ++m) {
      entries[b].push_back({c.scores[m], tp && *tp == m});
    }
  }
  if (out.agents == 0) return out;
  out.miss_rate = static_cast<double>(missed) / static_cast<double>(out.agents);
  double sum = 0.0;
  std::size_t buckets = 0;
  for (std::size_t b = 0; b < kNumCommands; ++b) {
    if (gts[b] == 0) continue;
    sum += average_precision(entries[b], gts[b]);
    ++buckets;
  }
  out.map = sum / static_cast<double>(buckets);
  return out;
}

std::vector<double> tangent_headings(const Track & track, Point2 start, double initial)
{
  std::vector<double> h(track.size());
  double prev = initial;
  Point2 last = start;
  for (std::size_t i = 0; i < track.size(); ++i) {
    const double dx = track[i].x - last.x, dy = track[i].y - last.y;
    if (std::hypot(dx, dy) >= 1e-3) prev = std::atan2(dy, dx);
    h[i] = prev;
    last = track[i];
  }
  return h;
}

bool top1_overlaps(const Track & top1, const GroundTruth & gt, const std::vector<GroundTruth> & others)
{
  check_length(top1, gt);
  const auto heading = tangent_headings(top1, gt.current, gt.current_heading);
  for (std::size_t t = 0; t < top1.size(); ++t) {
    if (!gt.valid[t]) continue;
    const geometry::Box mine{top1[t].x, top1[t].y, heading[t], gt.length, gt.width};
    for (const auto & o : others) {
      if (t >= o.points.size() || !o.valid[t]) continue;
      const geometry::Box theirs{o.points[t].x, o.points[t].y, o.heading[t], o.length, o.width};
      if (geometry::boxes_intersect(mine, theirs)) return true;
    }
  }
  return false;
}

PlanningResult planning_metrics(const Track & plan, const GroundTruth & gt,
                                const std::vector<PredictedAgent> & agents, double dt)
{
  const std::size_t s1 = static_cast<std::size_t>(std::lround(1.0 / dt)) - 1;
  const std::size_t s3 = static_cast<std::size_t>(std::lround(3.0 / dt)) - 1;
  const std::size_t s5 = static_cast<std::size_t>(std::lround(5.0 / dt)) - 1;
  if (plan.size() <= s5 || gt.points.size() <= s5) {
    throw std::invalid_argument("planning metrics need a horizon of at least 5 s");
  }
  check_length(plan, gt);
  PlanningResult r;
  r.pe_1s = dist(plan[s1], gt.points[s1]);
  r.pe_3s = dist(plan[s3], gt.points[s3]);
  r.pe_5s = dist(plan[s5], gt.points[s5]);
  for (std::size_t s : {s1, s3, s5}) {
    if (!gt.valid[s]) continue;
    const double t = static_cast<double>(s + 1) * dt;
    const auto e = decompose(plan[s], gt, s);
    if (std::abs(e.lateral) > 1.0 || std::abs(e.longitudinal) > 2.0 * (1.0 + t / 5.0)) r.miss = true;
  }
  std::size_t n = 0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (!gt.valid[i]) continue;
    r.ade += dist(plan[i], gt.points[i]);
    ++n;
  }
  if (n > 0) r.ade /= static_cast<double>(n);
  r.fde = r.pe_5s;

  std::vector<std::pair<double, const PredictedAgent *>> near;
  for (const auto & a : agents) near.push_back({dist(a.current, gt.current), &a});
  std::stable_sort(near.begin(), near.end(),
                   [](const auto & a, const auto & b) { return a.first < b.first; });
  if (near.size() > 10) near.resize(10);
  const auto ego_heading = tangent_headings(plan, gt.current, gt.current_heading);
  for (const auto & [d, a] : near) {
    const auto h = tangent_headings(a->top1, a->current, a->current_heading);
    const std::size_t steps = std::min(plan.size(), a->top1.size());
    for (std::size_t t = 0; t < steps && !r.collision; ++t) {
      const geometry::Box ego{plan[t].x, plan[t].y, ego_heading[t], gt.length, gt.width};
      const geometry::Box other{a->top1[t].x, a->top1[t].y, h[t], a->length, a->width};
      r.collision = geometry::boxes_intersect(ego, other);
    }
  }
  return r;
}

namespace
{

struct Accum
{
  std::vector<ForecastCase> cases;
  double ade = 0.0, fde = 0.0;
  std::size_t overlaps = 0, n = 0;
  double dt = 0.1;

  MetricRow row() const
  {
    MetricRow r;
    if (n == 0) return r;
    const auto mm = miss_and_map(cases, standard_checkpoints(dt));
    r.min_ade = ade / static_cast<double>(n);
    r.min_fde = fde / static_cast<double>(n);
    r.miss_rate = mm.miss_rate;
    r.map = mm.map;
    r.overlap_rate = static_cast<double>(overlaps) / static_cast<double>(n);
    r.agents = n;
    return r;
  }
};

}  // namespace

MetricsReport evaluate(const std::vector<scenario::Scenario> & scenes,
                       const std::vector<SceneForecast> & forecasts)
{
  std::map<std::string, const scenario::Scenario *> by_name;
  for (const auto & s : scenes) by_name[s.name] = &s;
  std::map<std::string, Accum> per_type;
  MetricsReport report;
  for (const auto & f : forecasts) {
    const auto it = by_name.find(f.scene);
    if (it == by_name.end()) throw std::invalid_argument("forecast for unknown scene '" + f.scene + "'");
    const scenario::Scenario & s = *it->second;
    Accum scene_acc;
    scene_acc.dt = s.dt;
    for (const auto & a : f.agents) {
      GroundTruth gt = ground_truth(s, a.agent_id);
      if (gt.valid_count() == 0) continue;
      std::vector<GroundTruth> others;
      for (const auto & o : s.agents) {
        if (o.id != a.agent_id) others.push_back(ground_truth(s, o.id));
      }
      const auto lbl = s.command_labels.find(a.agent_id);
      ForecastCase c{a.modes, a.scores, gt, lbl == s.command_labels.end() ? Command::Unknown : lbl->second};
      const bool overlap = top1_overlaps(a.modes[top1_index(a.scores)], gt, others);
      const double ade = *min_ade(a.modes, gt), fde = *min_fde(a.modes, gt);
      const std::string type{scenario::agent_type_name(s.find_agent(a.agent_id)->type)};
      for (Accum * acc : {&per_type[type], &scene_acc}) {
        acc->dt = s.dt;
        acc->cases.push_back(c);
        acc->ade += ade;
        acc->fde += fde;
        acc->overlaps += overlap ? 1 : 0;
        ++acc->n;
      }
    }
    report.by_scenario.push_back({f.scene, scene_acc.row()});
  }
  for (const auto & [type, acc] : per_type) report.by_type[type] = acc.row();
  if (!report.by_type.empty()) {
    MetricRow & avg = report.average;
    for (const auto & [type, r] : report.by_type) {
      avg.min_ade += r.min_ade;
      avg.min_fde += r.min_fde;
      avg.miss_rate += r.miss_rate;
      avg.overlap_rate += r.overlap_rate;
      avg.map += r.map;
      avg.agents += r.agents;
    }
    const double k = static_cast<double>(report.by_type.size());
    avg.min_ade /= k;
    avg.min_fde /= k;
    avg.miss_rate /= k;
    avg.overlap_rate /= k;
    avg.map /= k;
  }
  return report;
}

PlanningRow aggregate_planning(const std::vector<PlanningResult> & results)
{
  PlanningRow r;
  for (const auto & p : results) {
    r.pe_1s += p.pe_1s;
    r.pe_3s += p.pe_3s;
    r.pe_5s += p.pe_5s;
    r.miss_rate += p.miss ? 1.0 : 0.0;
    r.collision_rate += p.collision ? 1.0 : 0.0;
    r.ade += p.ade;
    r.fde += p.fde;
  }
  r.plans = results.size();
  if (r.plans > 0) {
    const double n = static_cast<double>(r.plans);
    r.pe_1s /= n;
    r.pe_3s /= n;
    r.pe_5s /= n;
    r.miss_rate /= n;
    r.collision_rate /= n;
    r.ade /= n;
    r.fde /= n;
  }
  return r;
}

}  // namespace trajplan::metrics
