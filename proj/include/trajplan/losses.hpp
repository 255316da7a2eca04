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

// Training losses: Gaussian-mixture NLL on the positive mode, mode
// classification, dense auxiliary L1, soft box-overlap collision penalty,
// kinematic consistency, and their weighted total with curriculum gating.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "trajplan/decoder.hpp"
#include "trajplan/kinematics.hpp"
#include "trajplan/tensor.hpp"

namespace trajplan::losses
{

using kinematics::Point2;
using tensor::Tensor;

struct LossWeights
{
  double gmm = 1.0;
  double cls = 1.0;
  double dense = 0.5;
  double collision = 0.5;
  double dynamics = 0.5;
  int warmup_epoch = 10;  // collision and dynamics switch on at this epoch
};

void validate(const LossWeights & w);

// Future track in the center agent's frame; all vectors have T_f entries.
struct TrackTarget
{
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> valid;

  std::size_t valid_count() const;
  // Last valid point; throws std::invalid_argument when there is none.
  Point2 endpoint() const;
};

// argmin_k |anchor_k - gt|, ties to the lowest index.
std::size_t hard_assign(const std::vector<Point2> & anchors, Point2 gt_endpoint);

// Mean over valid steps of -log N(gt; mu, Sigma) for one mode.
Tensor gmm_nll(const decoder::LayerPrediction & p, std::size_t mode, const TrackTarget & gt);

// Per-step NLL in closed form, for oracles and reports.
double gaussian_nll(double dx, double dy, double log_sigma_x, double log_sigma_y, double rho);

// -log scores[mode] for [1, K] scores.
Tensor cls_loss(const Tensor & scores, std::size_t mode);

// pred [N, T, 2]; |dx| + |dy| averaged over valid agent-steps. Zero when no
// step is valid.
Tensor dense_loss(const Tensor & pred, const std::vector<TrackTarget> & targets);

struct CollisionParams
{
  double beta = 12.0;  // softplus sharpness, 1/m
  double tau = 3.0;    // s
  double dt = 0.1;
};

// Ground-truth future of another agent, in the same frame as the prediction.
struct Obstacle
{
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> heading;
  std::vector<double> valid;
  double half_length = 0.0;
  double half_width = 0.0;
};

// softplus(beta (margin_x - |dx|)) softplus(beta (margin_y - |dy|)) / beta^2
double overlap_penalty(double dx, double dy, double margin_x, double margin_y, double beta);

// Sum over modes, steps and obstacles of overlap_penalty * exp(-t dt / tau)
// on valid steps, divided by the number of modes. Offsets are measured in
// each obstacle's heading frame; t counts from 0.
Tensor collision_loss(const Tensor & mu_x, const Tensor & mu_y, double half_length,
                      double half_width, const std::vector<Obstacle> & obstacles,
                      const CollisionParams & params);

// Mean over modes and valid steps of |integrate(pose0, controls) - mu|^2.
// Controls are bounded by the decoder parameterization, so the clamp of the
// kinematic model is the identity here.
Tensor dynamics_loss(const decoder::LayerPrediction & p, const kinematics::Pose & pose0,
                     const std::vector<double> & valid, double dt);

// Batch-averaged terms; undefined tensors count as absent.
struct LossTerms
{
  Tensor gmm;
  Tensor cls;
  Tensor dense;
  Tensor collision;
  Tensor dynamics;
};

struct LossReport
{
  double gmm = 0.0;
  double cls = 0.0;
  double dense = 0.0;
  double collision = 0.0;
  double dynamics = 0.0;
  double total = 0.0;
  bool collision_active = false;
  bool dynamics_active = false;
  std::vector<std::size_t> positive_modes;
};

struct TotalLoss
{
  Tensor total;
  LossReport report;
};

class NonFiniteLoss : public std::runtime_error
{
public:
  explicit NonFiniteLoss(std::string term)
    : std::runtime_error("non-finite " + term + " loss"), term_(std::move(term))
  {
  }
  const std::string & term() const { return term_; }

private:
  std::string term_;
};

// Throws NonFiniteLoss naming the first non-finite term. Before warmup_epoch the collision and dynamics terms are left out of the
// graph entirely, so no gradient reaches them.
TotalLoss total_loss(const LossTerms & terms, const LossWeights & weights, int epoch);

// Recomputes the total from a report's term values and flags.
double recombine(const LossReport & report, const LossWeights & weights);

}  // namespace trajplan::losses
