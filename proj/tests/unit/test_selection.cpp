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
#include <numeric>
#include <tuple>

#include "doctest.h"
#include "trajplan/rng.hpp"
#include "trajplan/selection.hpp"

namespace sel = trajplan::selection;
using trajplan::kinematics::Point2;

namespace
{

// Straight track from the origin to `end` over `steps` points.
std::vector<Point2> track_to(Point2 end, int steps = 5)
{
  std::vector<Point2> t;
  for (int i = 1; i <= steps; ++i) t.push_back({end.x * i / steps, end.y * i / steps});
  return t;
}

sel::ModeSet modes(const std::vector<Point2> & ends, const std::vector<double> & scores)
{
  sel::ModeSet m;
  for (const auto & e : ends) m.trajectories.push_back(track_to(e));
  m.scores = scores;
  return m;
}

sel::ModeSet random_modes(trajplan::Rng & rng, std::size_t k, double spread)
{
  std::vector<Point2> ends;
  std::vector<double> s;
  for (std::size_t i = 0; i < k; ++i) {
    ends.push_back({rng.uniform(-spread, spread), rng.uniform(-spread, spread)});
    // Coarse scores so ties happen.
    s.push_back(1.0 + static_cast<double>(rng.index(5)));
  }
  const double total = std::accumulate(s.begin(), s.end(), 0.0);
  for (auto & v : s) v /= total;
  return modes(ends, s);
}

double dist(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

TEST_CASE("nms documented examples")
{
  const auto one = sel::nms(modes({{3, 4}}, {1.0}));
  REQUIRE(one.size() == 1);
  CHECK(one.scores[0] == 1.0);

  const auto close = sel::nms(modes({{10, 0}, {11, 0}}, {0.4, 0.6}), 2.5, 1);
  REQUIRE(close.size() == 1);
  CHECK(close.source[0] == 1);
  CHECK(close.scores[0] == 1.0);

  const auto apart = sel::nms(modes({{10, 0}, {13, 0}}, {0.4, 0.6}), 2.5, 6);
  REQUIRE(apart.size() == 2);
  CHECK(apart.source == std::vector<std::size_t>{1, 0});
  CHECK_FALSE(apart.backfilled[0]);
  CHECK_FALSE(apart.backfilled[1]);
  CHECK(std::abs(apart.scores[0] - 0.6) < 1e-15);
}

TEST_CASE("nms keeps separated endpoints on random mode sets")
{
  trajplan::Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.index(16);
    const auto in = random_modes(rng, k, 6.0);
    const auto out = sel::nms(in, 2.5, 6);
    CHECK(out.size() == std::min<std::size_t>(6, k));
    CHECK(std::abs(std::accumulate(out.scores.begin(), out.scores.end(), 0.0) - 1.0) < 1e-12);
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (std::size_t j = i + 1; j < out.size(); ++j) {
        if (out.backfilled[i] || out.backfilled[j]) continue;
        CHECK(dist(out.trajectories[i].back(), out.trajectories[j].back()) > 2.5);
      }
    }
    // Survivors first, then backfills; each block in descending input score.
    bool seen_backfill = false;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out.backfilled[i]) seen_backfill = true;
      CHECK(out.backfilled[i] == seen_backfill);
      CHECK(out.trajectories[i] == in.trajectories[out.source[i]]);
    }
    if (!seen_backfill) {
      const auto again = sel::nms(out, 2.5, 6);
      CHECK(again.trajectories == out.trajectories);
      for (std::size_t i = 0; i < out.size(); ++i) CHECK(std::abs(again.scores[i] - out.scores[i]) < 1e-15);
    }
  }
}

TEST_CASE("nms matches a reference greedy pass")
{
  trajplan::Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.index(12);
    const auto in = random_modes(rng, k, 5.0);
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return in.scores[a] > in.scores[b]; });
    std::vector<std::size_t> kept, rest;
    for (auto i : order) {
      bool ok = true;
      for (auto j : kept) ok &= dist(in.trajectories[i].back(), in.trajectories[j].back()) > 2.5;
      (ok && kept.size() < 6 ? kept : rest).push_back(i);
    }
    for (auto i : rest) {
      if (kept.size() >= 6) break;
      kept.push_back(i);
    }
    CHECK(sel::nms(in, 2.5, 6).source == kept);
  }
}

TEST_CASE("joint combine documented examples")
{
  const auto a = modes({{1, 0}, {2, 0}}, {0.5, 0.5});
  const auto b = modes({{0, 1}, {0, 2}}, {0.4, 0.6});
  const auto pairs = sel::joint_combine(a, b, 1);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].a == 0);
  CHECK(pairs[0].b == 1);

  const auto single = modes({{1, 0}}, {1.0});
  const auto bm = modes({{0, 1}, {0, 2}, {0, 3}}, {0.2, 0.5, 0.3});
  const auto ranked = sel::joint_combine(single, bm, 6);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].b == 1);
  CHECK(ranked[1].b == 2);
  CHECK(ranked[2].b == 0);
  CHECK(std::abs(ranked[0].score - 0.5) < 1e-15);
}

TEST_CASE("joint combine equals brute-force enumeration")
{
  trajplan::Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_modes(rng, 6, 5), b = random_modes(rng, 6, 5);
    std::vector<std::tuple<double, std::size_t, std::size_t>> all;
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t j = 0; j < 6; ++j) all.emplace_back(a.scores[i] * b.scores[j], i, j);
    }
    std::sort(all.begin(), all.end(), [](const auto & x, const auto & y) {
      if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
      return std::tie(std::get<1>(x), std::get<2>(x)) < std::tie(std::get<1>(y), std::get<2>(y));
    });
    double total = 0;
    for (int i = 0; i < 6; ++i) total += std::get<0>(all[i]);
    const auto got = sel::joint_combine(a, b, 6);
    REQUIRE(got.size() == 6);
    for (int i = 0; i < 6; ++i) {
      CHECK(got[i].a == std::get<1>(all[i]));
      CHECK(got[i].b == std::get<2>(all[i]));
      CHECK(std::abs(got[i].score - std::get<0>(all[i]) / total) < 1e-12);
    }

    // Scaling one marginal leaves selection and normalized scores alone. A
    // power of two keeps tied products tied.
    auto scaled = a;
    for (auto & s : scaled.scores) s *= 4.0;
    const auto again = sel::joint_combine(scaled, b, 6);
    for (int i = 0; i < 6; ++i) {
      CHECK(again[i].a == got[i].a);
      CHECK(again[i].b == got[i].b);
      CHECK(std::abs(again[i].score - got[i].score) < 1e-12);
    }
  }
}
