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


#include "trajplan/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace trajplan::selection
{

ModeSet from_prediction(const decoder::LayerPrediction & p)
{
  const std::size_t k = p.mu_x.dim(0), tf = p.mu_x.dim(1);
  ModeSet m;
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<Point2> track(tf);
    for (std::size_t s = 0; s < tf; ++s) track[s] = {p.mu_x[i * tf + s], p.mu_y[i * tf + s]};
    m.trajectories.push_back(std::move(track));
    m.scores.push_back(p.scores[i]);
    m.source.push_back(i);
    m.backfilled.push_back(false);
  }
  return m;
}

namespace
{

std::vector<std::size_t> by_score(const std::vector<double> & scores)
{
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

void normalize(std::vector<double> & v)
{
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  if (s > 0.0) {
    for (double & x : v) x /= s;
  } else if (!v.empty()) {
    for (double & x : v) x = 1.0 / static_cast<double>(v.size());
  }
}

}  // namespace

ModeSet nms(const ModeSet & modes, double threshold, std::size_t keep)
{
  if (!(threshold > 0.0)) throw std::invalid_argument("nms: threshold must be positive");
  if (keep == 0) throw std::invalid_argument("nms: keep must be at least 1");
  if (modes.size() == 0) throw std::invalid_argument("nms: empty mode set");
  const auto order = by_score(modes.scores);
  std::vector<std::size_t> kept, suppressed;
  for (std::size_t i : order) {
    if (kept.size() >= keep) {
      suppressed.push_back(i);
      continue;
    }
    const Point2 e = modes.trajectories[i].back();
    bool far = true;
    for (std::size_t j : kept) {
      const Point2 f = modes.trajectories[j].back();
      if (std::hypot(e.x - f.x, e.y - f.y) <= threshold) {
        far = false;
        break;
      }
    }
    (far ? kept : suppressed).push_back(i);
  }
  ModeSet out;
  const auto emit = [&](std::size_t i, bool backfill) {
    out.trajectories.push_back(modes.trajectories[i]);
    out.scores.push_back(modes.scores[i]);
    out.source.push_back(modes.source.empty() ? i : modes.source[i]);
    out.backfilled.push_back(backfill);
  };
  for (std::size_t i : kept) emit(i, false);
  for (std::size_t i : suppressed) {
    if (out.size() >= keep) break;
    emit(i, true);
  }
  normalize(out.scores);
  return out;
}

std::vector<JointPair> joint_combine(const ModeSet & a, const ModeSet & b, std::size_t keep)
{
  if (a.size() == 0 || b.size() == 0) throw std::invalid_argument("joint_combine: empty mode set");
  std::vector<JointPair> pairs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) pairs.push_back({i, j, a.scores[i] * b.scores[j]});
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const JointPair & x, const JointPair & y) { return x.score > y.score; });
  if (pairs.size() > keep) pairs.resize(keep);
  std::vector<double> s;
  for (const auto & p : pairs) s.push_back(p.score);
  normalize(s);
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].score = s[i];
  return pairs;
}

}  // namespace trajplan::selection
