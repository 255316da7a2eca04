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


#include "trajplan/train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "trajplan/inference.hpp"
#include "json.hpp"

namespace trajplan::harness
{

using nlohmann::json;
namespace t = tensor;

AdamW::AdamW(const nn::ParameterStore & params, double beta1, double beta2, double epsilon,
             double weight_decay)
  : beta1_(beta1), beta2_(beta2), eps_(epsilon), wd_(weight_decay)
{
  for (const auto & [name, p] : params.entries()) {
    params_.push_back(p);
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void AdamW::step(double lr)
{
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto theta = params_[i].mutable_values();
    const auto g = params_[i].grad();
    auto & m = m_[i];
    auto & v = v_[i];
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double gk = g.empty() ? 0.0 : g[k];
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * gk;
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * gk * gk;
      const double mh = m[k] / c1, vh = v[k] / c2;
      theta[k] = theta[k] * (1.0 - lr * wd_) - lr * mh / (std::sqrt(vh) + eps_);
    }
  }
}

std::string RunLog::text() const
{
  std::string s;
  for (const auto & l : lines_) s += l + "\n";
  return s;
}

void RunLog::save(const std::string & path) const { save_lines(lines_, path); }

RunLog RunLog::load(const std::string & path)
{
  RunLog r;
  for (auto & l : load_lines(path)) r.add(std::move(l));
  return r;
}

namespace
{

json row_json(const metrics::MetricRow & r)
{
  return {{"min_ade", r.min_ade}, {"min_fde", r.min_fde}, {"miss_rate", r.miss_rate},
          {"overlap_rate", r.overlap_rate}, {"map", r.map}, {"agents", r.agents}};
}

metrics::MetricRow row_from(const json & j)
{
  metrics::MetricRow r;
  r.min_ade = j.at("min_ade").get<double>();
  r.min_fde = j.at("min_fde").get<double>();
  r.miss_rate = j.at("miss_rate").get<double>();
  r.overlap_rate = j.at("overlap_rate").get<double>();
  r.map = j.at("map").get<double>();
  r.agents = j.at("agents").get<std::size_t>();
  return r;
}

json metrics_json(const metrics::MetricsReport & r)
{
  json types = json::object();
  for (const auto & [k, v] : r.by_type) types[k] = row_json(v);
  json scenes = json::array();
  for (const auto & [k, v] : r.by_scenario) scenes.push_back({{"scene", k}, {"metrics", row_json(v)}});
  json j{{"average", row_json(r.average)}, {"by_type", types}, {"by_scenario", scenes}};
  if (r.planning) {
    const auto & p = *r.planning;
    j["planning"] = {{"pe_1s", p.pe_1s}, {"pe_3s", p.pe_3s}, {"pe_5s", p.pe_5s},
                     {"miss_rate", p.miss_rate}, {"collision_rate", p.collision_rate},
                     {"ade", p.ade}, {"fde", p.fde}, {"plans", p.plans}};
  }
  return j;
}

json report_json(const losses::LossReport & r)
{
  return {{"gmm", r.gmm},
          {"cls", r.cls},
          {"dense", r.dense},
          {"collision", r.collision},
          {"dynamics", r.dynamics},
          {"total", r.total},
          {"collision_active", r.collision_active},
          {"dynamics_active", r.dynamics_active}};
}

}  // namespace

std::string metrics_to_json(const metrics::MetricsReport & r) { return metrics_json(r).dump(2); }

metrics::MetricsReport metrics_from_json(const std::string & text)
{
  const json j = json::parse(text);
  metrics::MetricsReport r;
  r.average = row_from(j.at("average"));
  for (const auto & [k, v] : j.at("by_type").items()) r.by_type[k] = row_from(v);
  for (const auto & s : j.at("by_scenario")) {
    r.by_scenario.push_back({s.at("scene").get<std::string>(), row_from(s.at("metrics"))});
  }
  if (j.contains("planning")) {
    const auto & p = j["planning"];
    metrics::PlanningRow row;
    row.pe_1s = p.at("pe_1s").get<double>();
    row.pe_3s = p.at("pe_3s").get<double>();
    row.pe_5s = p.at("pe_5s").get<double>();
    row.miss_rate = p.at("miss_rate").get<double>();
    row.collision_rate = p.at("collision_rate").get<double>();
    row.ade = p.at("ade").get<double>();
    row.fde = p.at("fde").get<double>();
    row.plans = p.at("plans").get<std::size_t>();
    r.planning = row;
  }
  return r;
}

std::string step_record(int epoch, std::size_t step, double lr, const losses::LossReport & r)
{
  return json{{"kind", "step"}, {"epoch", epoch}, {"step", step}, {"lr", lr}, {"loss", report_json(r)},
              {"positive_modes", r.positive_modes}}
    .dump();
}

std::string epoch_record(int epoch, double lr, double availability, const metrics::MetricsReport * m)
{
  json j{{"kind", "epoch"}, {"epoch", epoch}, {"lr", lr}, {"availability", availability}};
  if (m) j["holdout"] = metrics_json(*m);
  return j.dump();
}

std::string checkpoint_record(const std::string & path)
{
  return json{{"kind", "checkpoint"}, {"path", path}}.dump();
}

Dataset make_dataset(const DataConfig & d)
{
  scenario::GeneratorOptions opt;
  opt.history_steps = d.history_steps;
  opt.future_steps = d.future_steps;
  opt.dt = d.dt;
  opt.max_interest = d.max_interest;
  Dataset out;
  for (std::size_t i = 0; i < d.scenarios + d.holdout; ++i) {
    const auto layout = d.layouts[i % d.layouts.size()];
    auto s = scenario::generate(mix_seed(d.seed, i), layout, d.agents, opt);
    commands::label_scenario(s);
    (i < d.scenarios ? out.train : out.holdout).push_back(std::move(s));
  }
  return out;
}

TrainResult train(const Config & config, const std::vector<scenario::Scenario> & scenes,
                  const commands::IntentionPointSet & points, const TrainOptions & options)
{
  validate(config);
  const auto samples = make_samples(scenes, config);
  if (samples.empty()) throw TrainingError("training set holds no usable interest agent");
  TrainResult result;
  result.model = std::make_unique<Model>(config, points);
  Model & model = *result.model;
  const auto & tc = config.train;
  AdamW opt(model.parameters(), tc.beta1, tc.beta2, tc.epsilon, tc.weight_decay);

  std::size_t step = 0;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    const double lr = learning_rate(tc, epoch);
    const double avail = commands::availability(epoch, config.masking);
    std::vector<std::map<int, Command>> masked;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      masked.push_back(commands::apply_mask(scenes[i].command_labels, epoch, config.masking,
                                            mix_seed(tc.seed, i), scenes[i].ego_id));
    }
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(tc.seed, 1000003ULL + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

    for (std::size_t begin = 0; begin < order.size(); begin += tc.batch_size) {
      const std::size_t end = std::min(order.size(), begin + tc.batch_size);
      const double inv = 1.0 / static_cast<double>(end - begin);
      model.parameters().zero_grad();
      losses::LossReport avg;
      for (std::size_t q = begin; q < end; ++q) {
        const Sample & s = samples[order[q]];
        const auto & labels = masked[s.scene_index];
        const auto it = labels.find(s.agent_id);
        const Command cmd = it == labels.end() ? Command::Unknown : it->second;
        t::Tape tape;
        t::TapeScope scope(tape);
        const SampleLoss sl = sample_loss(model, s, cmd);
        losses::TotalLoss tl;
        try {
          tl = losses::total_loss(sl.terms, config.loss, epoch);
        } catch (const losses::NonFiniteLoss & e) {
          throw TrainingError("step " + std::to_string(step) + ": non-finite " + e.term() +
                              " loss (scene " + s.source.name + ", agent " +
                              std::to_string(s.agent_id) + ")");
        }
        tape.backward(t::scale(tl.total, inv));
        const auto & r = tl.report;
        avg.gmm += r.gmm * inv;
        avg.cls += r.cls * inv;
        avg.dense += r.dense * inv;
        avg.collision += r.collision * inv;
        avg.dynamics += r.dynamics * inv;
        avg.total += r.total * inv;
        avg.collision_active = r.collision_active;
        avg.dynamics_active = r.dynamics_active;
        avg.positive_modes.push_back(sl.positive_mode);
      }
      if (options.before_update) options.before_update(epoch, step, model);
      opt.step(lr);
      result.log.add(step_record(epoch, step, lr, avg));
      if (options.after_step) options.after_step(epoch, step, model);
      ++step;
    }

    std::optional<metrics::MetricsReport> report;
    if (options.holdout && !options.holdout->empty()) {
      std::vector<metrics::SceneForecast> f;
      for (const auto & d : predict(model, *options.holdout)) f.push_back(to_forecast(d));
      report = metrics::evaluate(*options.holdout, f);
    }
    result.log.add(epoch_record(epoch, lr, avail, report ? &*report : nullptr));
    if (options.progress) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "epoch %d lr %.3g availability %.3f", epoch, lr, avail);
      std::string line = buf;
      if (report) {
        std::snprintf(buf, sizeof buf, " holdout minADE %.3f miss %.3f", report->average.min_ade,
                      report->average.miss_rate);
        line += buf;
      }
      options.progress(line);
    }
    if (options.stop_after_epoch >= 0 && epoch >= options.stop_after_epoch) break;
  }
  return result;
}

}  // namespace trajplan::harness
