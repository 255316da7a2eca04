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


#include "trajplan/report.hpp"

#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace trajplan::harness
{

using nlohmann::json;

namespace
{

std::string format(const char * fmt, auto... args)
{
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

std::string metric_line(const std::string & label, const metrics::MetricRow & r)
{
  return format("%-11s %8.4f %8.4f %9.4f %9.4f %8.4f %7zu\n", label.c_str(), r.min_ade, r.min_fde,
                r.miss_rate, r.overlap_rate, r.map, r.agents);
}

}  // namespace

std::string metrics_table(const metrics::MetricsReport & r)
{
  std::string out = format("%-11s %8s %8s %9s %9s %8s %7s\n", "type", "minADE", "minFDE", "miss", "overlap",
                           "mAP", "agents");
  static const std::pair<const char *, const char *> kRows[] = {
    {"vehicle", "Vehicle"}, {"pedestrian", "Pedestrian"}, {"cyclist", "Cyclist"}};
  bool any = false;
  for (const auto & [key, label] : kRows) {
    const auto it = r.by_type.find(key);
    if (it == r.by_type.end()) continue;
    out += metric_line(label, it->second);
    any = true;
  }
  if (any) out += metric_line("AVG", r.average);
  if (r.planning) {
    const auto & p = *r.planning;
    out += format("\n%-11s %8s %8s %8s %8s %9s %8s %8s %6s\n", "planning", "PE@1s", "PE@3s", "PE@5s", "miss",
                  "collision", "ADE", "FDE", "plans");
    out += format("%-11s %8.4f %8.4f %8.4f %8.4f %9.4f %8.4f %8.4f %6zu\n", "ego", p.pe_1s, p.pe_3s, p.pe_5s,
                  p.miss_rate, p.collision_rate, p.ade, p.fde, p.plans);
  }
  return out;
}

std::vector<EpochSummary> summarize(const RunLog & log)
{
  std::vector<EpochSummary> out;
  EpochSummary cur;
  const auto & lines = log.lines();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      const json j = json::parse(lines[i]);
      const std::string kind = j.at("kind");
      if (kind == "step") {
        const json & l = j.at("loss");
        auto & m = cur.mean_loss;
        m.gmm += l.at("gmm").get<double>();
        m.cls += l.at("cls").get<double>();
        m.dense += l.at("dense").get<double>();
        m.collision += l.at("collision").get<double>();
        m.dynamics += l.at("dynamics").get<double>();
        m.total += l.at("total").get<double>();
        m.collision_active = l.value("collision_active", false);
        m.dynamics_active = l.value("dynamics_active", false);
        ++cur.steps;
      } else if (kind == "epoch") {
        cur.epoch = j.at("epoch");
        cur.lr = j.at("lr");
        cur.availability = j.at("availability");
        if (cur.steps > 0) {
          const double inv = 1.0 / static_cast<double>(cur.steps);
          auto & m = cur.mean_loss;
          for (double * v : {&m.gmm, &m.cls, &m.dense, &m.collision, &m.dynamics, &m.total}) *v *= inv;
        }
        if (j.contains("holdout")) {
          const json & a = j["holdout"].at("average");
          cur.has_holdout = true;
          cur.holdout.min_ade = a.at("min_ade");
          cur.holdout.min_fde = a.at("min_fde");
          cur.holdout.miss_rate = a.at("miss_rate");
          cur.holdout.overlap_rate = a.at("overlap_rate");
          cur.holdout.map = a.at("map");
          cur.holdout.agents = a.at("agents");
        }
        out.push_back(cur);
        cur = EpochSummary{};
      }
    } catch (const json::exception & e) {
      throw std::invalid_argument("run log line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::string runlog_summary(const RunLog & log)
{
  const auto epochs = summarize(log);
  std::size_t checkpoints = 0, steps = 0;
  for (const auto & l : log.lines()) checkpoints += json::parse(l).value("kind", "") == "checkpoint";
  for (const auto & e : epochs) steps += e.steps;
  std::string out = format("%zu epochs, %zu steps, %zu checkpoints\n\n", epochs.size(), steps, checkpoints);
  out += format("%5s %9s %6s %8s %8s %8s %9s %9s %9s %8s %8s\n", "epoch", "lr", "avail", "gmm", "cls", "dense",
                "collision", "dynamics", "total", "hoADE", "hoMiss");
  for (const auto & e : epochs) {
    const auto & m = e.mean_loss;
    out += format("%5d %9.3g %6.3f %8.4f %8.4f %8.4f %9.4f %9.4f %9.4f", e.epoch, e.lr, e.availability, m.gmm,
                  m.cls, m.dense, m.collision, m.dynamics, m.total);
    out += e.has_holdout ? format(" %8.4f %8.4f\n", e.holdout.min_ade, e.holdout.miss_rate)
                         : format(" %8s %8s\n", "-", "-");
  }
  return out;
}

std::string epoch_csv(const RunLog & log)
{
  std::string out =
    "epoch,lr,availability,steps,gmm,cls,dense,collision,dynamics,total,"
    "holdout_min_ade,holdout_min_fde,holdout_miss_rate,holdout_overlap_rate,holdout_map\n";
  for (const auto & e : summarize(log)) {
    const auto & m = e.mean_loss;
    out += format("%d,%.17g,%.17g,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", e.epoch, e.lr, e.availability,
                  e.steps, m.gmm, m.cls, m.dense, m.collision, m.dynamics, m.total);
    if (e.has_holdout) {
      const auto & h = e.holdout;
      out += format(",%.17g,%.17g,%.17g,%.17g,%.17g\n", h.min_ade, h.min_fde, h.miss_rate, h.overlap_rate, h.map);
    } else {
      out += ",,,,,\n";
    }
  }
  return out;
}

std::string trajectory_csv(const std::vector<SceneDump> & dumps)
{
  std::ostringstream out;
  out << "scene,agent,mode,score,backfilled,t,x,y\n";
  for (const auto & d : dumps) {
    for (const auto & a : d.agents) {
      for (std::size_t k = 0; k < a.modes.size(); ++k) {
        const auto & m = a.modes[k];
        for (const auto & row : m.rows) {
          out << d.scene << ',' << a.id << ',' << k << ',' << format("%.17g", m.score) << ','
              << (m.backfilled ? 1 : 0) << ',' << format("%.17g,%.17g,%.17g", row[0], row[1], row[2]) << '\n';
        }
      }
    }
  }
  return out.str();
}

}  // namespace trajplan::harness
