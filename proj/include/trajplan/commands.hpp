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

// Command labeling, teacher-student command masking and per-command
// intention point clustering.

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trajplan/command.hpp"
#include "trajplan/kinematics.hpp"
#include "trajplan/scenario.hpp"
#include "trajplan/tensor.hpp"

namespace trajplan::commands
{

using kinematics::Point2;

struct LabelThresholds
{
  double stationary_displacement = 2.0;  // m
  double turn_angle_deg = 30.0;
};

// Labels from the future part of the track (states after current_step).
Command label_command(const scenario::AgentTrack & track, int current_step,
                      const LabelThresholds & thresholds = {});

// Writes labels for every agent into scene.command_labels.
void label_scenario(scenario::Scenario & scene, const LabelThresholds & thresholds = {});

// Ego command at inference from route waypoints in the ego frame; Unknown
// for an empty route.
Command command_from_route(const std::vector<Point2> & route,
                           const LabelThresholds & thresholds = {});

struct MaskingSchedule
{
  double start_availability = 0.9;
  double end_availability = 0.1;
  int total_epochs = 35;
  int ramp_epochs = 5;
};

void validate(const MaskingSchedule & s);

// Probability that a non-ego command stays visible at `epoch`.
double availability(int epoch, const MaskingSchedule & schedule);

std::map<int, Command> apply_mask(const std::map<int, Command> & commands, int epoch,
                                  const MaskingSchedule & schedule, std::uint64_t seed,
                                  int ego_id);

struct IntentionPointSet
{
  std::size_t k = 0;
  std::array<std::vector<Point2>, kNumCommands> points;

  const std::vector<Point2> & anchors(Command c) const { return points[command_index(c)]; }
};

using EndpointPools = std::array<std::vector<Point2>, kNumCommands>;

struct KMeansResult
{
  std::vector<Point2> centers;
  std::vector<double> inertia;  // after each assignment step
  int iterations = 0;
};

// Farthest-point initialization whose first pick comes from `seed`, then
// Lloyd iterations until assignments stop changing or max_iterations.
// Pools with fewer than k points return the points followed by copies of
// their mean.
KMeansResult kmeans(const std::vector<Point2> & points, std::size_t k, std::uint64_t seed,
                    int max_iterations = 50);

// Vehicle commands cluster their own pools; Unknown and Vru share the
// clustering of the union of all pools. Throws std::invalid_argument naming
// the command of an empty pool.
IntentionPointSet cluster_intention_points(const EndpointPools & pools, std::size_t k,
                                           std::uint64_t seed = 0);

// Last valid future position of every interest agent, in that agent's frame,
// pooled by its command label.
EndpointPools collect_endpoints(const std::vector<scenario::Scenario> & scenes);

std::string to_json(const IntentionPointSet & set);
IntentionPointSet intention_points_from_json(const std::string & text);

// Learnable e_c rows, one per command.
struct CommandEmbeddingTable
{
  tensor::Tensor table;  // [6, D]

  static CommandEmbeddingTable create(std::size_t dim, std::uint64_t seed);
  // [1, D] slice; differentiable.
  tensor::Tensor row(Command c) const;
};

}  // namespace trajplan::commands
