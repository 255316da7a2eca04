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


// trajplan command-line interface. Exit codes: 0 ok, 1 input error,
// 2 numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "trajplan/checkpoint.hpp"
#include "trajplan/commands.hpp"
#include "trajplan/config.hpp"
#include "trajplan/inference.hpp"
#include "trajplan/metrics.hpp"
#include "trajplan/report.hpp"
#include "trajplan/scenario.hpp"
#include "trajplan/train.hpp"

namespace
{

using namespace trajplan;

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kNumericFailure = 2;

class InputError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
}

Command command_arg(const std::string & name)
{
  const auto c = parse_command(name);
  if (!c) throw InputError("unknown command '" + name + "'");
  return *c;
}

struct GenerateArgs
{
  std::uint64_t seed = 1;
  std::string layout = "four_way";
  int agents = 8;
  int count = 1;
  int history = 11;
  int future = 30;
  int max_interest = 8;
  double dt = 0.1;
  bool label = false;
  std::string out;
};

int run_generate(const GenerateArgs & a)
{
  const auto layout = scenario::parse_layout(a.layout);
  if (!layout) throw InputError("unknown layout '" + a.layout + "'");
  scenario::GeneratorOptions opt;
  opt.history_steps = a.history;
  opt.future_steps = a.future;
  opt.dt = a.dt;
  opt.max_interest = a.max_interest;
  std::vector<scenario::Scenario> scenes;
  for (int i = 0; i < a.count; ++i) {
    auto s = scenario::generate(a.seed + static_cast<std::uint64_t>(i), *layout, a.agents, opt);
    if (a.label) commands::label_scenario(s);
    scenes.push_back(std::move(s));
  }
  scenario::save(scenes, a.out);
  return kOk;
}

int run_label(const std::string & in, const std::string & out)
{
  auto scenes = scenario::load(in);
  for (auto & s : scenes) commands::label_scenario(s);
  scenario::save(scenes, out);
  return kOk;
}

int run_cluster(const std::string & in, std::size_t k, std::uint64_t seed, const std::string & out)
{
  const auto scenes = scenario::load(in);
  const auto points = commands::cluster_intention_points(commands::collect_endpoints(scenes), k, seed);
  write_file(out, commands::to_json(points) + "\n");
  return kOk;
}

struct TrainArgs
{
  std::string config;
  std::string scenes, holdout, points;
  std::string out = "model.ckpt";
  std::string log = "run.jsonl";
  bool quiet = false;
};

int run_train(const TrainArgs & a)
{
  const auto cfg = harness::load_config(a.config);
  std::vector<scenario::Scenario> train_scenes, holdout_scenes;
  if (a.scenes.empty()) {
    auto ds = harness::make_dataset(cfg.data);
    train_scenes = std::move(ds.train);
    holdout_scenes = std::move(ds.holdout);
  } else {
    train_scenes = scenario::load(a.scenes);
  }
  if (!a.holdout.empty()) holdout_scenes = scenario::load(a.holdout);
  if (train_scenes.empty()) throw InputError("no training scenes");
  const auto points = a.points.empty()
                        ? commands::cluster_intention_points(commands::collect_endpoints(train_scenes),
                                                             cfg.model.num_modes, cfg.data.seed)
                        : commands::intention_points_from_json(read_file(a.points));
  harness::TrainOptions opt;
  if (!holdout_scenes.empty()) opt.holdout = &holdout_scenes;
  if (!a.quiet) opt.progress = [](const std::string & line) { std::cerr << line << '\n'; };
  auto result = harness::train(cfg, train_scenes, points, opt);
  harness::save_checkpoint(*result.model, a.out);
  result.log.add(harness::checkpoint_record(a.out));
  result.log.save(a.log);
  return kOk;
}

std::unique_ptr<harness::Model> open_model(const std::string & checkpoint, const std::string & config)
{
  return config.empty() ? harness::load_checkpoint(checkpoint)
                        : harness::load_checkpoint(checkpoint, harness::load_config(config));
}

int run_predict(const std::string & checkpoint, const std::string & config, const std::string & scenes_path,
                const std::string & out)
{
  const auto model = open_model(checkpoint, config);
  std::vector<std::string> lines;
  for (const auto & d : harness::predict(*model, scenario::load(scenes_path))) {
    lines.push_back(harness::to_json_line(d));
  }
  harness::save_lines(lines, out);
  return kOk;
}

int run_plan(const std::string & checkpoint, const std::string & config, const std::string & scenes_path,
             const std::string & command, const std::string & only, const std::string & out)
{
  const Command c = command_arg(command);
  const auto model = open_model(checkpoint, config);
  std::vector<std::string> lines;
  for (const auto & s : scenario::load(scenes_path)) {
    if (!only.empty() && s.name != only) continue;
    lines.push_back(harness::to_json_line(harness::plan(*model, s, c)));
  }
  if (!only.empty() && lines.empty()) throw InputError("no scene named '" + only + "'");
  harness::save_lines(lines, out);
  return kOk;
}

int run_evaluate(const std::string & pred, const std::string & plans, const std::string & scenes_path,
                 const std::string & out)
{
  const auto scenes = scenario::load(scenes_path);
  std::vector<metrics::SceneForecast> forecasts;
  if (!pred.empty()) {
    const auto lines = harness::load_lines(pred);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      forecasts.push_back(harness::to_forecast(harness::scene_dump_from_json(lines[i], i + 1)));
    }
  }
  auto report = metrics::evaluate(scenes, forecasts);
  if (!plans.empty()) {
    std::vector<metrics::PlanningResult> results;
    const auto lines = harness::load_lines(plans);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto p = harness::plan_from_json(lines[i], i + 1);
      const scenario::Scenario * scene = nullptr;
      for (const auto & s : scenes) {
        if (s.name == p.scene) scene = &s;
      }
      if (!scene) throw InputError(plans + " line " + std::to_string(i + 1) + ": unknown scene '" + p.scene + "'");
      results.push_back(harness::evaluate_plan(p, *scene));
    }
    report.planning = metrics::aggregate_planning(results);
  }
  write_file(out, harness::metrics_to_json(report) + "\n");
  return kOk;
}

struct ReportArgs
{
  std::string runlog;
  std::vector<std::string> metrics;
  std::string pred;
  std::string out;           // summary text; stdout when empty
  std::string epoch_csv;     // plot-ready per-epoch table
  std::string traj_csv;      // plot-ready trajectories from a prediction dump
};

int run_report(const ReportArgs & a)
{
  if (a.runlog.empty() && a.metrics.empty() && a.pred.empty()) {
    throw InputError("report needs --runlog, --metrics or --pred");
  }
  std::string summary;
  if (!a.runlog.empty()) {
    const auto log = harness::RunLog::load(a.runlog);
    summary += "run log " + a.runlog + "\n" + harness::runlog_summary(log);
    if (!a.epoch_csv.empty()) write_file(a.epoch_csv, harness::epoch_csv(log));
  }
  for (const auto & path : a.metrics) {
    if (!summary.empty()) summary += "\n";
    summary += "metrics " + path + "\n" + harness::metrics_table(harness::metrics_from_json(read_file(path)));
  }
  if (!a.pred.empty() && !a.traj_csv.empty()) {
    std::vector<harness::SceneDump> dumps;
    const auto lines = harness::load_lines(a.pred);
    for (std::size_t i = 0; i < lines.size(); ++i) dumps.push_back(harness::scene_dump_from_json(lines[i], i + 1));
    write_file(a.traj_csv, harness::trajectory_csv(dumps));
  }
  if (a.out.empty()) {
    std::cout << summary;
  } else {
    write_file(a.out, summary);
  }
  return kOk;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"trajplan: command-conditioned trajectory prediction and planning"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto * g = app.add_subcommand("generate", "Write synthetic scenarios as JSON lines");
  g->add_option("--seed", gen.seed, "Seed of the first scenario");
  g->add_option("--layout", gen.layout, "straight, curve or four_way");
  g->add_option("--agents", gen.agents, "Agents per scenario");
  g->add_option("--count", gen.count, "Scenarios to write; seeds increase by one");
  g->add_option("--history", gen.history, "History steps including the current one");
  g->add_option("--future", gen.future, "Future steps");
  g->add_option("--dt", gen.dt, "Step length in seconds");
  g->add_option("--max-interest", gen.max_interest, "Interest agents per scenario");
  g->add_flag("--label", gen.label, "Also attach command labels");
  g->add_option("--out", gen.out, "Output file")->required();

  std::string in, out, config, checkpoint, scenes, pred, plans, command = "unknown", only;
  std::size_t k = 64;
  std::uint64_t seed = 0;

  auto * l = app.add_subcommand("label", "Attach command labels to scenarios");
  l->add_option("--in", in)->required();
  l->add_option("--out", out)->required();

  auto * c = app.add_subcommand("cluster", "Cluster intention points from labelled scenarios");
  c->add_option("--in", in)->required();
  c->add_option("--k", k, "Points per command");
  c->add_option("--seed", seed, "k-means seed");
  c->add_option("--out", out)->required();

  TrainArgs tr;
  auto * t = app.add_subcommand("train", "Train a model and write a checkpoint and run log");
  t->add_option("--config", tr.config, "Config file")->required();
  t->add_option("--scenes", tr.scenes, "Training scenes; generated from the config when absent");
  t->add_option("--holdout", tr.holdout, "Scenes for per-epoch evaluation");
  t->add_option("--points", tr.points, "Intention points; clustered from the training scenes when absent");
  t->add_option("--out", tr.out, "Checkpoint path");
  t->add_option("--log", tr.log, "Run log path");
  t->add_flag("--quiet", tr.quiet, "No per-epoch progress on stderr");

  auto * p = app.add_subcommand("predict", "Marginal predictions with every command Unknown");
  p->add_option("--checkpoint", checkpoint)->required();
  p->add_option("--config", config, "Reject the checkpoint unless compatible with this config");
  p->add_option("--scenes", scenes)->required();
  p->add_option("--out", out)->required();

  auto * pl = app.add_subcommand("plan", "Command-guided ego plans");
  pl->add_option("--checkpoint", checkpoint)->required();
  pl->add_option("--config", config, "Reject the checkpoint unless compatible with this config");
  pl->add_option("--scenes", scenes)->required();
  pl->add_option("--ego-command", command, "left_turn, straight, right_turn, stationary or unknown");
  pl->add_option("--scene", only, "Plan only the scene with this name");
  pl->add_option("--out", out)->required();

  auto * e = app.add_subcommand("evaluate", "Metrics for prediction and plan dumps");
  e->add_option("--pred", pred, "Prediction dump");
  e->add_option("--plans", plans, "Plan dump");
  e->add_option("--scenes", scenes)->required();
  e->add_option("--out", out)->required();

  ReportArgs rep;
  auto * r = app.add_subcommand("report", "Summaries and plot-ready CSV");
  r->add_option("--runlog", rep.runlog);
  r->add_option("--metrics", rep.metrics, "Metric files, one table each");
  r->add_option("--pred", rep.pred, "Prediction dump for --traj-csv");
  r->add_option("--out", rep.out, "Summary file; stdout when absent");
  r->add_option("--epoch-csv", rep.epoch_csv);
  r->add_option("--traj-csv", rep.traj_csv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success & s) {
    return app.exit(s);
  } catch (const CLI::ParseError & err) {
    app.exit(err);
    return kInputError;
  }

  try {
    if (*g) return run_generate(gen);
    if (*l) return run_label(in, out);
    if (*c) return run_cluster(in, k, seed, out);
    if (*t) return run_train(tr);
    if (*p) return run_predict(checkpoint, config, scenes, out);
    if (*pl) return run_plan(checkpoint, config, scenes, command, only, out);
    if (*e) return run_evaluate(pred, plans, scenes, out);
    if (*r) return run_report(rep);
  } catch (const harness::TrainingError & err) {
    std::cerr << "error: " << err.what() << '\n';
    return kNumericFailure;
  } catch (const losses::NonFiniteLoss & err) {
    std::cerr << "error: " << err.what() << '\n';
    return kNumericFailure;
  } catch (const std::exception & err) {
    std::cerr << "error: " << err.what() << '\n';
    return kInputError;
  }
  return kInputError;
}
