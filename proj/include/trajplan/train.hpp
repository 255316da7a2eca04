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

// AdamW, the training loop and its JSON-lines run log.

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajplan/config.hpp"
#include "trajplan/metrics.hpp"
#include "trajplan/model.hpp"

namespace trajplan::harness
{

// Decoupled weight decay: theta <- theta (1 - lr wd) - lr m_hat / (sqrt(v_hat) + eps).
class AdamW
{
public:
  AdamW(const nn::ParameterStore & params, double beta1, double beta2, double epsilon,
        double weight_decay);

  // Uses the gradients currently held by the parameters; a parameter with
  // no gradient is treated as having a zero gradient.
  void step(double lr);
  std::size_t steps() const { return t_; }

private:
  std::vector<tensor::Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double beta1_, beta2_, eps_, wd_;
  std::size_t t_ = 0;
};

class TrainingError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class RunLog
{
public:
  void add(std::string line) { lines_.push_back(std::move(line)); }
  const std::vector<std::string> & lines() const { return lines_; }
  std::string text() const;
  void save(const std::string & path) const;
  static RunLog load(const std::string & path);

private:
  std::vector<std::string> lines_;
};

std::string step_record(int epoch, std::size_t step, double lr, const losses::LossReport & r);
std::string epoch_record(int epoch, double lr, double availability, const metrics::MetricsReport * m);
std::string checkpoint_record(const std::string & path);

struct TrainOptions
{
  const std::vector<scenario::Scenario> * holdout = nullptr;  // per-epoch evaluation
  std::function<void(const std::string &)> progress;          // one line per epoch
  // Called after each optimizer step; for probes in tests.
  std::function<void(int epoch, std::size_t step, const Model &)> after_step;
  // Called after backward and before the optimizer step.
  std::function<void(int epoch, std::size_t step, const Model &)> before_update;
  int stop_after_epoch = -1;  // stop early after this epoch when >= 0
};

struct TrainResult
{
  std::unique_ptr<Model> model;
  RunLog log;
};

struct Dataset
{
  std::vector<scenario::Scenario> train;
  std::vector<scenario::Scenario> holdout;
};

// Labelled synthetic scenes: data.scenarios for training followed by
// data.holdout more, layouts cycling through data.layouts.
Dataset make_dataset(const DataConfig & d);

// Deterministic in (config, scenes, points). Throws TrainingError naming the
// step and loss term when a loss turns non-finite.
TrainResult train(const Config & config, const std::vector<scenario::Scenario> & scenes,
                  const commands::IntentionPointSet & points, const TrainOptions & options = {});

// Per-type metric table as JSON; the inverse of metrics_from_json.
std::string metrics_to_json(const metrics::MetricsReport & r);
metrics::MetricsReport metrics_from_json(const std::string & text);

}  // namespace trajplan::harness
