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


#pragma once

// Mode selection after decoding: endpoint NMS down to a few marginal
// modes, and pairwise joint combination for two interacting agents.

#include <cstddef>
#include <vector>

#include "trajplan/decoder.hpp"
#include "trajplan/kinematics.hpp"

namespace trajplan::selection
{

using kinematics::Point2;

struct ModeSet
{
  std::vector<std::vector<Point2>> trajectories;
  std::vector<double> scores;
  // Filled by nms(): which input mode each output came from, and whether it
  // was added back after suppression to reach `keep`.
  std::vector<std::size_t> source;
  std::vector<bool> backfilled;

  std::size_t size() const { return scores.size(); }
};

// Mean tracks and final-layer scores of a prediction.
ModeSet from_prediction(const decoder::LayerPrediction & p);

// Greedy endpoint NMS in descending score order (ties to the lower index).
// Survivors come first, then backfilled modes in score order. Scores are
// renormalized to sum to 1.
ModeSet nms(const ModeSet & modes, double threshold = 2.5, std::size_t keep = 6);

struct JointPair
{
  std::size_t a = 0;
  std::size_t b = 0;
  double score = 0.0;  // renormalized over the returned pairs
};

// All |A| x |B| pairs scored by the product of marginals; the `keep` best
// (ties in lexicographic index order), renormalized.
std::vector<JointPair> joint_combine(const ModeSet & a, const ModeSet & b, std::size_t keep = 6);

}  // namespace trajplan::selection
