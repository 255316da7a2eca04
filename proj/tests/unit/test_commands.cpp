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
#include <limits>
#include <numbers>

#include "doctest.h"
#include "trajplan/commands.hpp"
#include "trajplan/rng.hpp"

namespace cm = trajplan::commands;
namespace sc = trajplan::scenario;
using trajplan::Command;
using trajplan::kinematics::Point2;

namespace
{

// 11 history steps at the origin heading east, then an arc turning by
// `total_turn` over `future` steps at `speed`.
sc::AgentTrack make_track(double speed, double total_turn, int future = 30,
                          sc::AgentType type = sc::AgentType::Vehicle)
{
  sc::AgentTrack a;
  a.type = type;
  for (int i = 0; i < 11; ++i) a.states.push_back({0, 0, 0, speed, 0, 4.5, 2.0, true});
  double x = 0, y = 0, h = 0;
  for (int i = 0; i < future; ++i) {
    h += total_turn / future;
    x += speed * 0.1 * std::cos(h);
    y += speed * 0.1 * std::sin(h);
    a.states.push_back({x, y, h, speed * std::cos(h), speed * std::sin(h), 4.5, 2.0, true});
  }
  return a;
}

double deg(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

TEST_CASE("command labels from future motion")
{
  CHECK(cm::label_command(make_track(8, 0.0), 10) == Command::Straight);
  CHECK(cm::label_command(make_track(8, deg(90)), 10) == Command::LeftTurn);
  CHECK(cm::label_command(make_track(8, deg(-90)), 10) == Command::RightTurn);
  CHECK(cm::label_command(make_track(8, deg(20)), 10) == Command::Straight);
  CHECK(cm::label_command(make_track(0.5, deg(90)), 10) == Command::Stationary);
  CHECK(cm::label_command(make_track(8, 0.0, 30, sc::AgentType::Pedestrian), 10) == Command::Vru);
  CHECK(cm::label_command(make_track(8, 0.0, 30, sc::AgentType::Cyclist), 10) == Command::Vru);

  auto hidden = make_track(8, 0.0);
  for (std::size_t i = 11; i < hidden.states.size(); ++i) hidden.states[i].valid = false;
  CHECK(cm::label_command(hidden, 10) == Command::Unknown);
}

TEST_CASE("route commands")
{
  CHECK(cm::command_from_route({}) == Command::Unknown);
  CHECK(cm::command_from_route({{5, 0}, {10, 0}, {20, 0}}) == Command::Straight);
  CHECK(cm::command_from_route({{5, 0}, {10, 3}, {12, 10}}) == Command::LeftTurn);
  CHECK(cm::command_from_route({{5, 0}, {10, -3}, {12, -10}}) == Command::RightTurn);
  CHECK(cm::command_from_route({{0.5, 0}, {1.0, 0}}) == Command::Stationary);
}

TEST_CASE("masking schedule availability")
{
  const cm::MaskingSchedule s;
  CHECK(cm::availability(0, s) == 0.9);
  CHECK(cm::availability(29, s) == 0.9);
  CHECK(cm::availability(34, s) == 0.1);
  for (int e = 0; e + 1 < 35; ++e) CHECK(cm::availability(e + 1, s) <= cm::availability(e, s));
  CHECK_THROWS_AS(cm::availability(35, s), std::out_of_range);
  CHECK_THROWS_AS(cm::availability(-1, s), std::out_of_range);
  cm::MaskingSchedule bad = s;
  bad.ramp_epochs = 40;
  CHECK_THROWS(cm::validate(bad));
}

TEST_CASE("masking keeps the ego and hits the target rate")
{
  std::map<int, Command> labels;
  for (int i = 0; i < 10000; ++i) labels[i] = Command::LeftTurn;
  const cm::MaskingSchedule s;
  const auto masked = cm::apply_mask(labels, 34, s, 123, 0);
  CHECK(masked.at(0) == Command::LeftTurn);
  int kept = 0;
  for (const auto & [id, c] : masked) {
    if (id != 0 && c == Command::LeftTurn) ++kept;
    if (c != Command::LeftTurn) CHECK(c == Command::Unknown);
  }
  CHECK(std::abs(kept / 9999.0 - 0.1) < 0.01);
  CHECK(cm::apply_mask(labels, 34, s, 123, 0) == masked);
  CHECK(cm::apply_mask(labels, 34, s, 124, 0) != masked);
}

TEST_CASE("kmeans small cases")
{
  const std::vector<Point2> pts{{0, 0}, {2, 0}, {4, 3}, {-1, 5}};
  const auto one = cm::kmeans(pts, 1, 0);
  REQUIRE(one.centers.size() == 1);
  CHECK(one.centers[0].x == doctest::Approx(1.25));
  CHECK(one.centers[0].y == doctest::Approx(2.0));

  const auto all = cm::kmeans(pts, 4, 3);
  REQUIRE(all.centers.size() == 4);
  for (const auto & p : pts) {
    bool hit = false;
    for (const auto & c : all.centers) hit |= c.x == p.x && c.y == p.y;
    CHECK(hit);
  }
  CHECK(all.inertia.back() == 0.0);

  const auto padded = cm::kmeans({{1, 1}, {3, 3}}, 4, 0);
  REQUIRE(padded.centers.size() == 4);
  CHECK(padded.centers[2].x == 2.0);
  CHECK(padded.centers[3].y == 2.0);
}

TEST_CASE("kmeans with k=2 finds the best two-way split")
{
  trajplan::Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Point2> pts;
    for (int i = 0; i < 9; ++i) {
      const double off = i < 4 ? 0.0 : 6.0;
      pts.push_back({off + rng.normal(), rng.normal()});
    }
    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 1; mask + 1 < (1u << pts.size()); ++mask) {
      double cost = 0.0;
      for (int side = 0; side < 2; ++side) {
        double sx = 0, sy = 0;
        int n = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if (((mask >> i) & 1u) == static_cast<unsigned>(side)) {
            sx += pts[i].x;
            sy += pts[i].y;
            ++n;
          }
        }
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if (((mask >> i) & 1u) == static_cast<unsigned>(side)) {
            cost += std::pow(pts[i].x - sx / n, 2) + std::pow(pts[i].y - sy / n, 2);
          }
        }
      }
      best = std::min(best, cost);
    }
    const auto r = cm::kmeans(pts, 2, static_cast<std::uint64_t>(trial));
    CHECK(r.inertia.back() == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("kmeans inertia never increases")
{
  trajplan::Rng rng(8);
  std::vector<Point2> pts;
  for (int i = 0; i < 300; ++i) pts.push_back({rng.uniform(-30, 30), rng.uniform(-30, 30)});
  const auto r = cm::kmeans(pts, 8, 5);
  for (std::size_t i = 1; i < r.inertia.size(); ++i) {
    CHECK(r.inertia[i] <= r.inertia[i - 1] + 1e-9);
  }
}

TEST_CASE("intention points per command")
{
  cm::EndpointPools pools;
  pools[trajplan::command_index(Command::LeftTurn)] = {{10, 10}, {12, 9}};
  pools[trajplan::command_index(Command::Straight)] = {{30, 0}, {25, 1}, {28, -1}};
  pools[trajplan::command_index(Command::RightTurn)] = {{10, -10}};
  pools[trajplan::command_index(Command::Stationary)] = {{0.5, 0}};
  const auto set = cm::cluster_intention_points(pools, 2);
  for (auto c : trajplan::kAllCommands) CHECK(set.anchors(c).size() == 2);
  for (const auto & p : set.anchors(Command::LeftTurn)) CHECK(p.y > 8.0);
  const auto round = cm::intention_points_from_json(cm::to_json(set));
  CHECK(round.anchors(Command::Unknown)[1].x == set.anchors(Command::Unknown)[1].x);

  pools[trajplan::command_index(Command::RightTurn)].clear();
  try {
    cm::cluster_intention_points(pools, 2);
    FAIL("expected an error");
  } catch (const std::invalid_argument & e) {
    CHECK(std::string(e.what()).find("right_turn") != std::string::npos);
  }
}

TEST_CASE("command embeddings are differentiable rows")
{
  const auto table = cm::CommandEmbeddingTable::create(8, 1);
  CHECK(table.table.shape() == trajplan::tensor::Shape{6, 8});
  trajplan::tensor::Tape tape;
  {
    trajplan::tensor::TapeScope scope(tape);
    const auto loss = trajplan::tensor::sum(table.row(Command::RightTurn));
    tape.backward(loss);
  }
  const auto g = table.table.grad();
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == (i / 8 == 2 ? 1.0 : 0.0));
}
