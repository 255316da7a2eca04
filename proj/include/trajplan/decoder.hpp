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

// Command-conditioned motion decoder. K motion queries start from the
// command embedding, attend to each other (keyed by their static intention
// points) and to the scene tokens (keyed by their dynamic search positions),
// and every layer emits a full Gaussian-mixture prediction.

#include <cmath>
#include <cstddef>
#include <vector>

#include "trajplan/encoder.hpp"
#include "trajplan/nn.hpp"

namespace trajplan::decoder
{

using kinematics::Point2;
using tensor::Tensor;

struct DecoderConfig
{
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t layers = 2;
  std::size_t future_steps = 30;
  std::size_t dynamic_map = 32;  // L nearest map tokens per query
  double position_scale = 10.0;
  double log_sigma_min = std::log(0.01);
  double log_sigma_max = std::log(10.0);
  double rho_max = 0.5;
  double speed_max = 30.0;
  double yaw_rate_max = 1.0;
  double pe_min_wavelength = 1.0;
  double pe_max_wavelength = 256.0;
  double dt = 0.1;
};

void validate(const DecoderConfig & c);

// One decoder layer's prediction. Trajectory channels are [K, T]; scores
// are [1, K] and lie on the simplex.
struct LayerPrediction
{
  Tensor mu_x;
  Tensor mu_y;
  Tensor log_sigma_x;
  Tensor log_sigma_y;
  Tensor rho;
  Tensor speed;
  Tensor yaw_rate;
  Tensor scores;
};

struct Prediction
{
  std::vector<LayerPrediction> layers;
  std::vector<Point2> anchors;
  const LayerPrediction & final_layer() const { return layers.back(); }
};

class MotionDecoder
{
public:
  MotionDecoder(nn::ParameterStore & store, const DecoderConfig & config, Rng & rng);

  const DecoderConfig & config() const { return config_; }

  // `anchors` are the static intention points of the command; `embedding`
  // is its [1, D] row.
  Prediction operator()(const encoder::SceneContext & context, const std::vector<Point2> & anchors,
                        const Tensor & embedding) const;

  // Allowed keys per query: valid agents, the L valid map tokens nearest to
  // the query's search position (ties to the lower index), valid lanes.
  std::vector<double> cross_mask(const encoder::SceneContext & context,
                                 const std::vector<Point2> & search) const;

private:
  struct Layer
  {
    nn::MultiHeadAttention self_attention;
    nn::LayerNorm norm1;
    nn::MultiHeadAttention cross_attention;
    nn::Linear center;  // center-agent token, added to the cross-attention residual
    nn::LayerNorm norm2;
    nn::Mlp ffn;
    nn::LayerNorm norm3;
    nn::Mlp gmm_head;
    nn::Mlp control_head;
    nn::Mlp score_head;
  };

  LayerPrediction heads(const Layer & layer, const Tensor & content,
                        const std::vector<Point2> & prior) const;

  DecoderConfig config_;
  nn::Mlp static_pe_;
  nn::Mlp dynamic_pe_;
  std::vector<Layer> layers_;
};

// Anchor directions stretched to the distance covered at `speed` over
// `horizon` seconds; a zero anchor points straight ahead.
std::vector<Point2> prior_endpoints(const std::vector<Point2> & anchors, double speed,
                                    double horizon);

// Endpoint of every mode's mean track at the last step.
std::vector<Point2> endpoints(const LayerPrediction & p);

}  // namespace trajplan::decoder
