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
#include <set>

#include "doctest.h"
#include "trajplan/commands.hpp"
#include "trajplan/geometry.hpp"
#include "trajplan/metrics.hpp"
#include "trajplan/rng.hpp"

namespace mt = trajplan::metrics;
namespace geo = trajplan::geometry;
namespace sc = trajplan::scenario;
using trajplan::Command;
using trajplan::kinematics::Point2;

namespace
{

// Straight GT along +x at `speed`, `steps` future points, dt 0.1.
mt::GroundTruth straight_gt(std::size_t steps, double speed = 10.0, Point2 start = {0, 0})
{
  mt::GroundTruth g;
  g.current = start;
  g.length = 4.5;
  g.width = 2.0;
  for (std::size_t i = 0; i < steps; ++i) {
    g.points.push_back({start.x + speed * 0.1 * static_cast<double>(i + 1), start.y});
    g.heading.push_back(0.0);
    g.valid.push_back(true);
  }
  return g;
}

mt::Track shifted(const mt::Track & t, double dx, double dy)
{
  mt::Track out = t;
  for (auto & p : out) {
    p.x += dx;
    p.y += dy;
  }
  return out;
}

// Interpolated AP by brute force: every distinct score is a threshold; at
// each achieved recall level take the best precision at that recall or
// beyond.
double ap_oracle(const std::vector<mt::ScoredEntry> & e, std::size_t num_gt)
{
  std::set<double> thresholds;
  for (const auto & x : e) thresholds.insert(x.score);
  std::vector<std::pair<double, double>> pr;  // recall, precision
  for (double th : thresholds) {
    std::size_t tp = 0, n = 0;
    for (const auto & x : e) {
      if (x.score >= th) {
        ++n;
        tp += x.true_positive;
      }
    }
    pr.push_back({static_cast<double>(tp) / num_gt, static_cast<double>(tp) / n});
  }
  std::set<double> recalls{0.0};
  for (const auto & [r, p] : pr) recalls.insert(r);
  double ap = 0, prev = 0;
  for (double r : recalls) {
    if (r == 0.0) continue;
    double best = 0;
    for (const auto & [rr, p] : pr) {
      if (rr >= r) best = std::max(best, p);
    }
    ap += (r - prev) * best;
    prev = r;
  }
  return ap;
}

bool mc_intersect(const geo::Box & a, const geo::Box & b)
{
  const int n = 160;
  const double c = std::cos(a.heading), s = std::sin(a.heading);
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double u = (static_cast<double>(i) / n - 0.5) * a.length;
      const double v = (static_cast<double>(j) / n - 0.5) * a.width;
      if (geo::box_contains(b, a.cx + c * u - s * v, a.cy + s * u + c * v)) return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("minADE and minFDE examples")
{
  const auto gt = straight_gt(30);
  CHECK(*mt::min_ade({gt.points}, gt) == 0.0);
  CHECK(std::abs(*mt::min_ade({shifted(gt.points, 1, 0)}, gt) - 1.0) < 1e-12);
  CHECK(*mt::min_ade({shifted(gt.points, 2, 0), gt.points}, gt) == 0.0);
  CHECK(std::abs(*mt::min_fde({shifted(gt.points, 0, 2), shifted(gt.points, 5, 0)}, gt) - 2.0) < 1e-12);

  auto early = gt;
  std::fill(early.valid.begin() + 1, early.valid.end(), false);
  auto mode = gt.points;
  mode[0].y += 0.7;
  mode.back().y += 9;
  CHECK(std::abs(*mt::min_fde({mode}, early) - 0.7) < 1e-12);

  auto none = gt;
  std::fill(none.valid.begin(), none.valid.end(), false);
  CHECK_FALSE(mt::min_ade({gt.points}, none).has_value());
}

TEST_CASE("minADE never exceeds any single mode")
{
  trajplan::Rng rng(8);
  const auto gt = straight_gt(20);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<mt::Track> modes;
    for (int k = 0; k < 4; ++k) modes.push_back(shifted(gt.points, rng.uniform(-3, 3), rng.uniform(-3, 3)));
    const double best = *mt::min_ade(modes, gt);
    for (const auto & m : modes) CHECK(best <= *mt::min_ade({m}, gt));
  }
}

TEST_CASE("average precision equals the exhaustive PR oracle")
{
  trajplan::Rng rng(50);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.index(12);
    const std::size_t gts = 1 + rng.index(4);
    std::vector<mt::ScoredEntry> e;
    std::size_t tps = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool tp = tps < gts && rng.bernoulli(0.4);
      tps += tp;
      e.push_back({static_cast<double>(rng.index(6)) / 5.0, tp});
    }
    CHECK(std::abs(mt::average_precision(e, gts) - ap_oracle(e, gts)) <= 1e-9);
  }
  CHECK(mt::average_precision({{1.0, true}}, 1) == 1.0);
  CHECK(mt::average_precision({{0.9, false}, {0.1, false}}, 1) == 0.0);
}

TEST_CASE("a zero-score duplicate never raises mAP")
{
  trajplan::Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<mt::ScoredEntry> e;
    for (int i = 0; i < 6; ++i) e.push_back({rng.uniform(0.01, 1), i == 2});
    const double base = mt::average_precision(e, 1);
    e.push_back({0.0, false});
    CHECK(mt::average_precision(e, 1) <= base);
  }
}

TEST_CASE("miss rate and mAP")
{
  const auto gt = straight_gt(30);
  const auto cps = mt::standard_checkpoints(0.1);
  const mt::ForecastCase perfect{{gt.points}, {1.0}, gt, Command::Straight};
  auto r = mt::miss_and_map({perfect}, cps);
  CHECK(r.miss_rate == 0.0);
  CHECK(r.map == 1.0);

  const mt::ForecastCase far{{shifted(gt.points, 100, 0), shifted(gt.points, 0, 100)}, {0.5, 0.5}, gt,
                             Command::Straight};
  r = mt::miss_and_map({far}, cps);
  CHECK(r.miss_rate == 1.0);
  CHECK(r.map == 0.0);

  // Lateral 0.9 m hits at 3 s, 1.1 m does not.
  CHECK(mt::mode_hits(shifted(gt.points, 0, 0.9), gt, cps));
  CHECK_FALSE(mt::mode_hits(shifted(gt.points, 0, 1.1), gt, cps));
  CHECK(mt::mode_hits(shifted(gt.points, 1.9, 0), gt, cps));
  CHECK_FALSE(mt::mode_hits(shifted(gt.points, 2.1, 0), gt, cps));
}

TEST_CASE("mAP over buckets matches the oracle on random instances")
{
  trajplan::Rng rng(77);
  const auto cps = mt::standard_checkpoints(0.1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<mt::ForecastCase> cases;
    std::map<Command, std::vector<mt::ScoredEntry>> entries;
    std::map<Command, std::size_t> gts;
    std::size_t missed = 0;
    const std::size_t agents = 1 + rng.index(5);
    for (std::size_t a = 0; a < agents; ++a) {
      const auto gt = straight_gt(30, rng.uniform(2, 12), {rng.uniform(-20, 20), rng.uniform(-20, 20)});
      mt::ForecastCase c{{}, {}, gt, rng.bernoulli(0.5) ? Command::Straight : Command::LeftTurn};
      std::vector<bool> hit;
      for (int k = 0; k < 3; ++k) {
        const bool h = rng.bernoulli(0.4);
        c.modes.push_back(shifted(gt.points, h ? rng.uniform(-1.5, 1.5) : 5.0, h ? rng.uniform(-0.8, 0.8) : 0.0));
        c.scores.push_back(static_cast<double>(1 + rng.index(4)) / 10.0);
        hit.push_back(h);
      }
      int tp = -1;
      for (int k = 0; k < 3; ++k) {
        if (hit[k] && (tp < 0 || c.scores[k] > c.scores[tp])) tp = k;
      }
      missed += tp < 0;
      for (int k = 0; k < 3; ++k) entries[c.bucket].push_back({c.scores[k], k == tp});
      ++gts[c.bucket];
      cases.push_back(c);
    }
    double map = 0;
    for (const auto & [b, e] : entries) map += ap_oracle(e, gts[b]);
    map /= static_cast<double>(entries.size());
    const auto r = mt::miss_and_map(cases, cps);
    CHECK(std::abs(r.map - map) <= 1e-9);
    CHECK(std::abs(r.miss_rate - static_cast<double>(missed) / agents) <= 1e-12);
    CHECK(r.map >= 0.0);
    CHECK(r.map <= 1.0);
  }
}

TEST_CASE("box intersection agrees with point sampling")
{
  trajplan::Rng rng(31);
  int hits = 0, checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const geo::Box a{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(0.5, 5),
                     rng.uniform(0.5, 2.5)};
    const geo::Box b{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(0.5, 5),
                     rng.uniform(0.5, 2.5)};
    // Skip near-tangent pairs where sampling resolution decides.
    geo::Box grown = a, shrunk = a;
    grown.length *= 1.03;
    grown.width *= 1.03;
    shrunk.length *= 0.97;
    shrunk.width *= 0.97;
    if (geo::boxes_intersect(grown, b) != geo::boxes_intersect(shrunk, b)) continue;
    ++checked;
    const bool sat = geo::boxes_intersect(a, b);
    hits += sat;
    CHECK(sat == mc_intersect(a, b));
    CHECK(sat == geo::boxes_intersect(b, a));
  }
  CHECK(checked > 200);
  CHECK(hits > 20);
}

TEST_CASE("top-1 overlap")
{
  const auto gt = straight_gt(10);
  CHECK_FALSE(mt::top1_overlaps(gt.points, gt, {}));

  // Oncoming agent reaching the same point at the same step.
  mt::GroundTruth other = gt;
  for (std::size_t i = 0; i < 10; ++i) other.points[i] = {10.0 - static_cast<double>(i), 0.0};
  std::fill(other.heading.begin(), other.heading.end(), std::numbers::pi);
  other.current = {11, 0};
  other.current_heading = std::numbers::pi;
  CHECK(mt::top1_overlaps(gt.points, gt, {other}));
  CHECK(mt::top1_overlaps(other.points, other, {gt}));

  auto lateral = other;
  for (auto & p : lateral.points) p.y = 5.0;
  CHECK_FALSE(mt::top1_overlaps(gt.points, gt, {lateral}));
}

TEST_CASE("planning metrics")
{
  const auto gt = straight_gt(50);
  const auto same = mt::planning_metrics(gt.points, gt, {}, 0.1);
  CHECK(same.pe_1s == 0.0);
  CHECK(same.pe_5s == 0.0);
  CHECK(same.ade == 0.0);
  CHECK(same.fde == 0.0);
  CHECK_FALSE(same.miss);
  CHECK_FALSE(same.collision);

  const auto ahead = mt::planning_metrics(shifted(gt.points, 1, 0), gt, {}, 0.1);
  CHECK(std::abs(ahead.pe_1s - 1.0) < 1e-12);
  CHECK(std::abs(ahead.pe_3s - 1.0) < 1e-12);
  CHECK(std::abs(ahead.pe_5s - 1.0) < 1e-12);
  CHECK_FALSE(ahead.miss);
  CHECK(mt::planning_metrics(shifted(gt.points, 0, 1.2), gt, {}, 0.1).miss);

  // A parked car on the path at x = 20 m, where the plan is at t = 2 s.
  mt::PredictedAgent parked{mt::Track(50, {20, 0}), 4.5, 2.0, 0.0, {20, 0}};
  CHECK(mt::planning_metrics(gt.points, gt, {parked}, 0.1).collision);
  parked.top1.assign(50, {20, 6});
  parked.current = {20, 6};
  CHECK_FALSE(mt::planning_metrics(gt.points, gt, {parked}, 0.1).collision);

  CHECK_THROWS_AS(mt::planning_metrics(straight_gt(30).points, straight_gt(30), {}, 0.1), std::invalid_argument);
}

TEST_CASE("scene evaluation: perfect forecasts, rigid invariance, type averages")
{
  sc::GeneratorOptions opt;
  opt.future_steps = 30;
  opt.max_interest = 8;
  std::vector<sc::Scenario> scenes;
  for (int i = 0; i < 3; ++i) {
    auto s = sc::generate(100 + i, static_cast<sc::Layout>(i), 6, opt);
    trajplan::commands::label_scenario(s);
    scenes.push_back(s);
  }
  std::vector<mt::SceneForecast> perfect, noisy;
  trajplan::Rng rng(5);
  for (const auto & s : scenes) {
    mt::SceneForecast f{s.name, {}}, g{s.name, {}};
    for (int id : s.interest_ids) {
      const auto gt = mt::ground_truth(s, id);
      if (!s.find_agent(id)->states[s.current_step()].valid) continue;
      f.agents.push_back({id, {gt.points}, {1.0}});
      g.agents.push_back({id, {shifted(gt.points, rng.uniform(-2, 2), rng.uniform(-1, 1)), shifted(gt.points, 3, 0)},
                          {0.7, 0.3}});
    }
    perfect.push_back(f);
    noisy.push_back(g);
  }
  const auto r = mt::evaluate(scenes, perfect);
  CHECK(r.average.min_ade == 0.0);
  CHECK(r.average.min_fde == 0.0);
  CHECK(r.average.miss_rate == 0.0);
  CHECK(r.average.map == 1.0);

  const auto n = mt::evaluate(scenes, noisy);
  double sum_ade = 0, sum_map = 0;
  for (const auto & [type, row] : n.by_type) {
    sum_ade += row.min_ade;
    sum_map += row.map;
  }
  CHECK(std::abs(n.average.min_ade - sum_ade / n.by_type.size()) <= 1e-9);
  CHECK(std::abs(n.average.map - sum_map / n.by_type.size()) <= 1e-9);

  // Rotate and translate every scene and forecast together.
  const double ang = 0.7, tx = 13, ty = -4;
  auto moved_scenes = scenes;
  auto moved = noisy;
  const auto move = [&](double & x, double & y) {
    const double nx = std::cos(ang) * x - std::sin(ang) * y + tx;
    y = std::sin(ang) * x + std::cos(ang) * y + ty;
    x = nx;
  };
  for (auto & s : moved_scenes) {
    for (auto & a : s.agents) {
      for (auto & st : a.states) {
        move(st.x, st.y);
        const double vx = std::cos(ang) * st.vx - std::sin(ang) * st.vy;
        st.vy = std::sin(ang) * st.vx + std::cos(ang) * st.vy;
        st.vx = vx;
        st.heading = trajplan::kinematics::wrap_angle(st.heading + ang);
      }
    }
  }
  for (auto & f : moved) {
    for (auto & a : f.agents) {
      for (auto & m : a.modes) {
        for (auto & p : m) move(p.x, p.y);
      }
    }
  }
  const auto m = mt::evaluate(moved_scenes, moved);
  CHECK(std::abs(m.average.min_ade - n.average.min_ade) < 1e-9);
  CHECK(std::abs(m.average.min_fde - n.average.min_fde) < 1e-9);
  CHECK(m.average.miss_rate == n.average.miss_rate);
  CHECK(std::abs(m.average.map - n.average.map) < 1e-9);
  CHECK(m.average.overlap_rate == n.average.overlap_rate);
}
