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

// Human-readable summaries and plot-ready CSV dumps built from run logs,
// metric reports and prediction dumps. Nothing here recomputes a metric.

#include <string>
#include <vector>

#include "trajplan/inference.hpp"
#include "trajplan/metrics.hpp"
#include "trajplan/train.hpp"

namespace trajplan::harness
{

// Per-type table (Vehicle, Pedestrian, Cyclist, AVG) with minADE, minFDE,
// miss rate, overlap rate and mAP; a planning table follows when present.
// Types without agents are left out. AVG is copied from the report.
std::string metrics_table(const metrics::MetricsReport & r);

struct EpochSummary
{
  int epoch = 0;
  double lr = 0.0;
  double availability = 0.0;
  std::size_t steps = 0;
  losses::LossReport mean_loss;  // mean over the epoch's steps
  bool has_holdout = false;
  metrics::MetricRow holdout;  // holdout average
};

// Throws std::invalid_argument naming the line of a malformed record.
std::vector<EpochSummary> summarize(const RunLog & log);

std::string runlog_summary(const RunLog & log);
// epoch,lr,availability,steps,gmm,cls,dense,collision,dynamics,total,
// holdout_min_ade,holdout_min_fde,holdout_miss_rate,holdout_overlap_rate,holdout_map
std::string epoch_csv(const RunLog & log);
// scene,agent,mode,score,backfilled,t,x,y
std::string trajectory_csv(const std::vector<SceneDump> & dumps);

}  // namespace trajplan::harness
