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

// Polyline encoders for agent histories, map polylines and reachable lanes,
// and the local-attention scene encoder on top of them.
//
// Everything is expressed in the center agent's frame: build_inputs() takes
// a scene already passed through scenario::to_agent_frame().

#include <cstddef>
#include <vector>

#include "trajplan/kinematics.hpp"
#include "trajplan/nn.hpp"
#include "trajplan/rng.hpp"
#include "trajplan/scenario.hpp"
#include "trajplan/tensor.hpp"

namespace trajplan::encoder
{

using kinematics::Point2;
using tensor::Tensor;

struct EncoderConfig
{
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t layers = 2;
  std::size_t k_neighbors = 16;
  std::size_t max_agents = 16;
  std::size_t max_map = 64;
  std::size_t max_lanes = 16;
  std::size_t max_points = 20;
  std::size_t rel_pe_dim = 16;
  std::size_t future_steps = 30;  // dense auxiliary head horizon
  double position_scale = 10.0;
};

void validate(const EncoderConfig & c);

// x, y, cos h, sin h, vx, vy, length, width, type one-hot (3), is_center,
// is_ego, step fraction.
inline constexpr std::size_t kAgentFeatures = 14;
// x, y, cos dir, sin dir, kind one-hot (4).
inline constexpr std::size_t kMapFeatures = 8;
// x, y, cos dir, sin dir, path distance.
inline constexpr std::size_t kLaneFeatures = 5;

// Fixed-size per-modality inputs. Each modality holds at least one token so
// that shapes never degenerate; padding tokens are invalid.
struct SceneInputs
{
  std::size_t history_steps = 0;
  std::size_t points = 0;
  std::vector<int> agent_ids;  // token order, center first; -1 marks padding
  std::vector<int> map_ids;
  std::vector<int> lane_ids;
  Tensor agent_features;  // [Na, T_h, kAgentFeatures]
  std::vector<double> agent_step_mask;  // [Na * T_h]
  Tensor map_features;  // [Nm, P, kMapFeatures]
  std::vector<double> map_point_mask;
  Tensor lane_features;  // [Nl, P, kLaneFeatures]
  std::vector<double> lane_point_mask;
  std::vector<double> valid;  // agents, then map, then lanes
  std::vector<Point2> positions;
  double center_speed = 0.0;  // m/s at the current step

  std::size_t agent_count() const { return agent_ids.size(); }
  std::size_t map_count() const { return map_ids.size(); }
  std::size_t lane_count() const { return lane_ids.size(); }
  std::size_t token_count() const { return valid.size(); }
};

// `scene` must be in the center agent's frame; `lanes` come from
// scenario::reachable_lanes() for the same agent. Agents beyond max_agents
// are dropped farthest first; the rest are ordered by id after the center.
// Map tokens are the max_map polylines closest to the center, nearest first.
SceneInputs build_inputs(const scenario::Scenario & scene, int center_id,
                         const scenario::ReachableLanes & lanes, const EncoderConfig & config);

struct SceneContext
{
  Tensor tokens;  // [N, D]; agents, map, lanes
  std::vector<double> valid;
  std::vector<Point2> positions;
  std::size_t n_agents = 0;
  std::size_t n_map = 0;
  std::size_t n_lanes = 0;
  double center_speed = 0.0;

  Tensor agents() const;
  Tensor map() const;
  Tensor lanes() const;
};

// k nearest valid tokens of every valid token, self included, ordered by
// distance with ties to the lower index. Invalid tokens get empty lists.
std::vector<std::vector<std::size_t>> neighbor_indices(const std::vector<Point2> & positions,
                                                       const std::vector<double> & valid,
                                                       std::size_t k);

// Sinusoidal features of P_j - P_i, as a constant [N, N, dim] tensor.
Tensor relative_encoding(const std::vector<Point2> & positions, std::size_t dim);

// Two-stage PointNet-style encoder: per-point MLP, masked max-pool, a second
// layer that sees each point together with the pooled vector, a final pool
// and projection. Output rows of invalid polylines are zero.
struct PolylineEncoder
{
  nn::Mlp pre;
  nn::Linear local;
  nn::Linear global;
  nn::Linear out;

  // features [N, P, F], point mask [N * P], valid [N] -> [N, D]
  Tensor operator()(const Tensor & features, const std::vector<double> & point_mask,
                    const std::vector<double> & valid) const;
};

PolylineEncoder make_polyline_encoder(nn::ParameterStore & store, const std::string & name,
                                      std::size_t in, std::size_t dim, Rng & rng);

class SceneEncoder
{
public:
  SceneEncoder(nn::ParameterStore & store, const EncoderConfig & config, Rng & rng);

  const EncoderConfig & config() const { return config_; }

  // Polyline encoders only, concatenated [N, D].
  Tensor embed(const SceneInputs & inputs) const;
  // Local attention stack over already embedded tokens.
  SceneContext refine(const Tensor & tokens, const SceneInputs & inputs) const;
  SceneContext operator()(const SceneInputs & inputs) const;

  // Auxiliary future positions of every agent token, [Na, T_f, 2] meters.
  Tensor dense_prediction(const SceneContext & context) const;

private:
  struct Layer
  {
    nn::MultiHeadAttention attention;
    Tensor relative_weight;  // [E, D]
    nn::LayerNorm norm1;
    nn::Mlp ffn;
    nn::LayerNorm norm2;
  };

  EncoderConfig config_;
  PolylineEncoder agents_;
  PolylineEncoder map_;
  PolylineEncoder lanes_;
  std::vector<Layer> layers_;
  nn::Mlp dense_head_;
};

}  // namespace trajplan::encoder
