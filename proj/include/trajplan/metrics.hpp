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

// Prediction metrics (minADE, minFDE, miss rate, overlap rate, mAP) and
// open-loop planning metrics. Tracks cover the future steps after the
// current one, in any common frame.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trajplan/command.hpp"
#include "trajplan/kinematics.hpp"
#include "trajplan/scenario.hpp"

namespace trajplan::metrics
{

using kinematics::Point2;
using Track = std::vector<Point2>;

struct GroundTruth
{
  std::vector<Point2> points;
  std::vector<double> heading;
  std::vector<bool> valid;
  double length = 0.0;
  double width = 0.0;
  double current_heading = 0.0;
  Point2 current;

  std::size_t valid_count() const;
};

// Future of one agent, in world coordinates.
GroundTruth ground_truth(const scenario::Scenario & s, int agent_id);

// nullopt when the GT has no valid step.
std::optional<double> min_ade(const std::vector<Track> & modes, const GroundTruth & gt);
std::optional<double> min_fde(const std::vector<Track> & modes, const GroundTruth & gt);

// Error of `p` against `gt` at `step`, split along the GT heading.
struct CrossAlong
{
  double lateral = 0.0;
  double longitudinal = 0.0;
};
CrossAlong decompose(const Point2 & p, const GroundTruth & gt, std::size_t step);

struct MissCheckpoint
{
  std::size_t step = 0;
  double lateral = 0.0;
  double longitudinal = 0.0;
};

// Checkpoints at 3, 5 and 8 s. Only those inside the horizon with a valid
// GT step are used; when none remains, the last valid step is checked
// against the first checkpoint's thresholds.
std::vector<MissCheckpoint> standard_checkpoints(double dt);

bool mode_hits(const Track & mode, const GroundTruth & gt,
               const std::vector<MissCheckpoint> & checkpoints);

struct ScoredEntry
{
  double score = 0.0;
  bool true_positive = false;
};

// Area under the interpolated precision-recall curve. Entries with equal
// scores enter together.
double average_precision(std::vector<ScoredEntry> entries, std::size_t num_gt);

struct ForecastCase
{
  std::vector<Track> modes;
  std::vector<double> scores;
  GroundTruth gt;
  Command bucket = Command::Unknown;
};

struct MissAndMap
{
  double miss_rate = 0.0;
  double map = 0.0;
  std::size_t agents = 0;
};

// Agents without a valid GT step are skipped. mAP averages over command
// buckets that hold at least one agent.
MissAndMap miss_and_map(const std::vector<ForecastCase> & cases,
                        const std::vector<MissCheckpoint> & checkpoints);

// Heading of each step's displacement, the first measured from `start`.
// Steps moving less than 1e-3 m keep the previous heading, beginning with
// `initial`.
std::vector<double> tangent_headings(const Track & track, Point2 start, double initial);

// Whether the top-1 track's box hits any other GT box at a step where both
// GTs are valid.
bool top1_overlaps(const Track & top1, const GroundTruth & gt,
                   const std::vector<GroundTruth> & others);

struct PredictedAgent
{
  Track top1;
  double length = 0.0;
  double width = 0.0;
  double current_heading = 0.0;
  Point2 current;
};

struct PlanningResult
{
  double pe_1s = 0.0;
  double pe_3s = 0.0;
  double pe_5s = 0.0;
  bool miss = false;
  bool collision = false;
  double ade = 0.0;
  double fde = 0.0;
};

// Throws std::invalid_argument when the plan or GT is shorter than 5 s.
PlanningResult planning_metrics(const Track & plan, const GroundTruth & ego_gt,
                                const std::vector<PredictedAgent> & agents, double dt);

struct MetricRow
{
  double min_ade = 0.0;
  double min_fde = 0.0;
  double miss_rate = 0.0;
  double overlap_rate = 0.0;
  double map = 0.0;
  std::size_t agents = 0;
};

struct PlanningRow
{
  double pe_1s = 0.0;
  double pe_3s = 0.0;
  double pe_5s = 0.0;
  double miss_rate = 0.0;
  double collision_rate = 0.0;
  double ade = 0.0;
  double fde = 0.0;
  std::size_t plans = 0;
};

struct MetricsReport
{
  std::map<std::string, MetricRow> by_type;  // agent type name -> row
  MetricRow average;  // mean of the by_type rows
  std::vector<std::pair<std::string, MetricRow>> by_scenario;
  std::optional<PlanningRow> planning;
};

struct AgentForecast
{
  int agent_id = 0;
  std::vector<Track> modes;  // world frame
  std::vector<double> scores;
};

struct SceneForecast
{
  std::string scene;
  std::vector<AgentForecast> agents;
};

// Matches forecasts to scenes by name. Buckets come from the scene's
// command labels.
MetricsReport evaluate(const std::vector<scenario::Scenario> & scenes,
                       const std::vector<SceneForecast> & forecasts);

PlanningRow aggregate_planning(const std::vector<PlanningResult> & results);

}  // namespace trajplan::metrics
