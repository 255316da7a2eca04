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


#include "trajplan/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace trajplan::encoder
{

namespace t = tensor;
using scenario::AgentState;
using scenario::AgentTrack;
using scenario::MapPoint;

void validate(const EncoderConfig & c)
{
  if (c.d_model == 0 || c.heads == 0 || c.d_model % c.heads != 0) {
    throw std::invalid_argument("encoder: d_model must be a positive multiple of heads");
  }
  if (c.k_neighbors == 0) throw std::invalid_argument("encoder: k_neighbors must be at least 1");
  if (c.max_agents == 0 || c.max_map == 0 || c.max_lanes == 0 || c.max_points == 0) {
    throw std::invalid_argument("encoder: token limits must be positive");
  }
  if (c.rel_pe_dim == 0 || c.rel_pe_dim % 4 != 0) {
    throw std::invalid_argument("encoder: rel_pe_dim must be a positive multiple of 4");
  }
}

namespace
{

const AgentState * last_valid_history(const AgentTrack & a, int current)
{
  for (int i = current; i >= 0; --i) {
    const auto & st = a.states.at(static_cast<std::size_t>(i));
    if (st.valid) return &st;
  }
  return nullptr;
}

double polyline_distance(const std::vector<MapPoint> & pts)
{
  double best = std::numeric_limits<double>::infinity();
  for (const auto & p : pts) best = std::min(best, std::hypot(p.x, p.y));
  return best;
}

Point2 centroid(const std::vector<MapPoint> & pts, std::size_t n)
{
  Point2 c;
  for (std::size_t i = 0; i < n; ++i) {
    c.x += pts[i].x;
    c.y += pts[i].y;
  }
  c.x /= static_cast<double>(n);
  c.y /= static_cast<double>(n);
  return c;
}

}  // namespace

SceneInputs build_inputs(const scenario::Scenario & scene, int center_id,
                         const scenario::ReachableLanes & lanes, const EncoderConfig & config)
{
  const int current = scene.current_step();
  const std::size_t th = static_cast<std::size_t>(scene.history_steps);
  const std::size_t np = config.max_points;
  const double scale = 1.0 / config.position_scale;

  const AgentTrack * center = scene.find_agent(center_id);
  if (!center || !center->states.at(static_cast<std::size_t>(current)).valid) {
    throw scenario::ScenarioError("build_inputs: center agent " + std::to_string(center_id) +
                                  " is not valid at the current step");
  }

  SceneInputs in;
  in.history_steps = th;
  in.points = np;

  // Agents.
  std::vector<std::pair<double, const AgentTrack *>> others;
  for (const auto & a : scene.agents) {
    if (a.id == center_id) continue;
    const AgentState * st = last_valid_history(a, current);
    if (st) others.push_back({std::hypot(st->x, st->y), &a});
  }
  std::stable_sort(others.begin(), others.end(),
                   [](const auto & a, const auto & b) { return a.first < b.first; });
  if (others.size() > config.max_agents - 1) others.resize(config.max_agents - 1);
  std::sort(others.begin(), others.end(),
            [](const auto & a, const auto & b) { return a.second->id < b.second->id; });
  std::vector<const AgentTrack *> agents{center};
  for (const auto & o : others) agents.push_back(o.second);

  std::vector<double> af(agents.size() * th * kAgentFeatures, 0.0);
  in.agent_step_mask.assign(agents.size() * th, 0.0);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const AgentTrack & a = *agents[i];
    in.agent_ids.push_back(a.id);
    for (std::size_t s = 0; s < th; ++s) {
      const AgentState & st = a.states.at(s);
      if (!st.valid) continue;
      in.agent_step_mask[i * th + s] = 1.0;
      double * f = &af[(i * th + s) * kAgentFeatures];
      f[0] = st.x * scale;
      f[1] = st.y * scale;
      f[2] = std::cos(st.heading);
      f[3] = std::sin(st.heading);
      f[4] = st.vx * scale;
      f[5] = st.vy * scale;
      f[6] = st.length / 5.0;
      f[7] = st.width / 5.0;
      f[8 + static_cast<std::size_t>(a.type)] = 1.0;
      f[11] = a.id == center_id ? 1.0 : 0.0;
      f[12] = a.id == scene.ego_id ? 1.0 : 0.0;
      f[13] = static_cast<double>(s + 1) / static_cast<double>(th);
    }
    const AgentState * last = last_valid_history(a, current);
    if (i == 0) in.center_speed = std::hypot(last->vx, last->vy);
    in.valid.push_back(1.0);
    in.positions.push_back({last->x, last->y});
  }
  in.agent_features = Tensor::constant({agents.size(), th, kAgentFeatures}, std::move(af));

  // Map polylines.
  std::vector<std::pair<double, const scenario::Polyline *>> polys;
  for (const auto & p : scene.map) {
    if (!p.points.empty()) polys.push_back({polyline_distance(p.points), &p});
  }
  std::stable_sort(polys.begin(), polys.end(), [](const auto & a, const auto & b) {
    return a.first != b.first ? a.first < b.first : a.second->id < b.second->id;
  });
  if (polys.size() > config.max_map) polys.resize(config.max_map);
  const std::size_t nm = std::max<std::size_t>(polys.size(), 1);
  std::vector<double> mf(nm * np * kMapFeatures, 0.0);
  in.map_point_mask.assign(nm * np, 0.0);
  for (std::size_t i = 0; i < polys.size(); ++i) {
    const auto & pts = polys[i].second->points;
    const std::size_t n = std::min(np, pts.size());
    in.map_ids.push_back(polys[i].second->id);
    for (std::size_t k = 0; k < n; ++k) {
      in.map_point_mask[i * np + k] = 1.0;
      double * f = &mf[(i * np + k) * kMapFeatures];
      f[0] = pts[k].x * scale;
      f[1] = pts[k].y * scale;
      f[2] = std::cos(pts[k].direction);
      f[3] = std::sin(pts[k].direction);
      f[4 + static_cast<std::size_t>(polys[i].second->kind)] = 1.0;
    }
    in.valid.push_back(1.0);
    in.positions.push_back(centroid(pts, n));
  }
  if (polys.empty()) {
    in.map_ids.push_back(-1);
    in.valid.push_back(0.0);
    in.positions.push_back({});
  }
  in.map_features = Tensor::constant({nm, np, kMapFeatures}, std::move(mf));

  // Reachable lanes.
  const std::size_t nl_real = std::min(config.max_lanes, lanes.lanes.size());
  const std::size_t nl = std::max<std::size_t>(nl_real, 1);
  std::vector<double> lf(nl * np * kLaneFeatures, 0.0);
  in.lane_point_mask.assign(nl * np, 0.0);
  for (std::size_t i = 0; i < nl_real; ++i) {
    const auto & lane = lanes.lanes[i];
    const std::size_t n = std::min(np, lane.points.size());
    in.lane_ids.push_back(lane.lane_id);
    for (std::size_t k = 0; k < n; ++k) {
      in.lane_point_mask[i * np + k] = 1.0;
      double * f = &lf[(i * np + k) * kLaneFeatures];
      f[0] = lane.points[k].x * scale;
      f[1] = lane.points[k].y * scale;
      f[2] = std::cos(lane.points[k].direction);
      f[3] = std::sin(lane.points[k].direction);
      f[4] = lane.path_distance / 50.0;
    }
    const bool ok = n > 0;
    in.valid.push_back(ok ? 1.0 : 0.0);
    in.positions.push_back(ok ? centroid(lane.points, n) : Point2{});
  }
  if (nl_real == 0) {
    in.lane_ids.push_back(-1);
    in.valid.push_back(0.0);
    in.positions.push_back({});
  }
  in.lane_features = Tensor::constant({nl, np, kLaneFeatures}, std::move(lf));
  return in;
}

Tensor SceneContext::agents() const { return t::slice(tokens, 0, 0, n_agents); }
Tensor SceneContext::map() const { return t::slice(tokens, 0, n_agents, n_agents + n_map); }
Tensor SceneContext::lanes() const
{
  return t::slice(tokens, 0, n_agents + n_map, n_agents + n_map + n_lanes);
}

std::vector<std::vector<std::size_t>> neighbor_indices(const std::vector<Point2> & positions,
                                                       const std::vector<double> & valid,
                                                       std::size_t k)
{
  if (k == 0) throw std::invalid_argument("neighbor_indices: k must be at least 1");
  if (positions.size() != valid.size()) {
    throw std::invalid_argument("neighbor_indices: positions and masks differ in length");
  }
  const std::size_t n = positions.size();
  std::vector<std::size_t> candidates;
  for (std::size_t j = 0; j < n; ++j) {
    if (valid[j] != 0.0) candidates.push_back(j);
  }
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < n; ++i) {
    if (valid[i] == 0.0) continue;
    order.clear();
    for (std::size_t j : candidates) {
      const double dx = positions[j].x - positions[i].x;
      const double dy = positions[j].y - positions[i].y;
      order.push_back({dx * dx + dy * dy, j});
    }
    const std::size_t m = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end());
    for (std::size_t q = 0; q < m; ++q) out[i].push_back(order[q].second);
  }
  return out;
}

Tensor relative_encoding(const std::vector<Point2> & positions, std::size_t dim)
{
  const std::size_t n = positions.size();
  const double max_wl = 4.0 * std::pow(4.0, static_cast<double>(dim / 4) - 1.0);
  std::vector<double> v;
  v.reserve(n * n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      nn::sinusoidal_row(positions[j].x - positions[i].x, positions[j].y - positions[i].y, dim,
                         4.0, max_wl, v);
    }
  }
  return Tensor::constant({n, n, dim}, std::move(v));
}

Tensor PolylineEncoder::operator()(const Tensor & features, const std::vector<double> & point_mask,
                                   const std::vector<double> & valid) const
{
  const std::size_t n = features.dim(0);
  const Tensor h = t::relu(pre(features));
  const Tensor g = t::max_pool(h, 1, &point_mask);
  const std::size_t d = g.dim(1);
  const Tensor h2 = t::relu(t::add(local(h), t::reshape(global(g), {n, 1, d})));
  const Tensor pooled = t::max_pool(h2, 1, &point_mask);
  return nn::mask_rows(out(pooled), valid);
}

PolylineEncoder make_polyline_encoder(nn::ParameterStore & store, const std::string & name,
                                      std::size_t in, std::size_t dim, Rng & rng)
{
  PolylineEncoder e;
  e.pre = nn::make_mlp(store, name + ".pre", {in, dim, dim}, rng);
  e.local = nn::make_linear(store, name + ".local", dim, dim, rng);
  e.global = nn::make_linear(store, name + ".global", dim, dim, rng);
  e.out = nn::make_linear(store, name + ".out", dim, dim, rng);
  return e;
}

SceneEncoder::SceneEncoder(nn::ParameterStore & store, const EncoderConfig & config, Rng & rng)
  : config_(config)
{
  validate(config);
  const std::size_t d = config.d_model;
  agents_ = make_polyline_encoder(store, "encoder.agents", kAgentFeatures, d, rng);
  map_ = make_polyline_encoder(store, "encoder.map", kMapFeatures, d, rng);
  lanes_ = make_polyline_encoder(store, "encoder.lanes", kLaneFeatures, d, rng);
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string p = "encoder.layer" + std::to_string(l);
    Layer layer;
    layer.attention = nn::make_attention(store, p + ".attn", d, config.heads, rng);
    layer.relative_weight = store.add(p + ".rel", {config.rel_pe_dim, d},
                                      1.0 / std::sqrt(static_cast<double>(config.rel_pe_dim)), rng);
    layer.norm1 = nn::make_layer_norm(store, p + ".norm1", d);
    layer.ffn = nn::make_mlp(store, p + ".ffn", {d, 2 * d, d}, rng);
    layer.norm2 = nn::make_layer_norm(store, p + ".norm2", d);
    layers_.push_back(std::move(layer));
  }
  dense_head_ = nn::make_mlp(store, "encoder.dense", {d, d, config.future_steps * 2}, rng);
}

Tensor SceneEncoder::embed(const SceneInputs & in) const
{
  const std::size_t na = in.agent_count(), nm = in.map_count();
  const std::vector<double> va(in.valid.begin(), in.valid.begin() + static_cast<std::ptrdiff_t>(na));
  const std::vector<double> vm(in.valid.begin() + static_cast<std::ptrdiff_t>(na),
                               in.valid.begin() + static_cast<std::ptrdiff_t>(na + nm));
  const std::vector<double> vl(in.valid.begin() + static_cast<std::ptrdiff_t>(na + nm),
                               in.valid.end());
  return t::concat({agents_(in.agent_features, in.agent_step_mask, va),
                    map_(in.map_features, in.map_point_mask, vm),
                    lanes_(in.lane_features, in.lane_point_mask, vl)},
                   0);
}

SceneContext SceneEncoder::refine(const Tensor & tokens, const SceneInputs & in) const
{
  const std::size_t n = in.token_count();
  if (tokens.rank() != 2 || tokens.dim(0) != n) {
    throw t::ShapeError("SceneEncoder: expected " + std::to_string(n) + " tokens, got " +
                        t::to_string(tokens.shape()));
  }
  SceneContext ctx;
  ctx.valid = in.valid;
  ctx.positions = in.positions;
  ctx.n_agents = in.agent_count();
  ctx.n_map = in.map_count();
  ctx.n_lanes = in.lane_count();
  ctx.center_speed = in.center_speed;

  Tensor x = tokens;
  if (!layers_.empty()) {
    const auto nbrs = neighbor_indices(in.positions, in.valid, config_.k_neighbors);
    std::vector<double> allow(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j : nbrs[i]) allow[i * n + j] = 1.0;
    }
    const Tensor mask = nn::additive_mask({n, n}, allow);
    const Tensor rel = relative_encoding(in.positions, config_.rel_pe_dim);
    const std::size_t h = config_.heads, d = config_.d_model, dh = d / h;
    const std::size_t e = config_.rel_pe_dim;
    const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
    for (const Layer & layer : layers_) {
      // bias[h, i, j] = rel[i, j, :] . (W_r^h q_i^h)
      const Tensor q = layer.attention.project_queries(x);  // [H, N, dh]
      const Tensor w = t::transpose(t::transpose(t::reshape(layer.relative_weight, {e, h, dh}), 0, 1), 1, 2);
      const Tensor g = t::matmul(q, w);  // [H, N, E]
      const Tensor gt = t::transpose(t::transpose(g, 0, 1), 1, 2);  // [N, E, H]
      const Tensor r = t::matmul(rel, gt);  // [N, N, H]
      const Tensor bias = t::scale(t::transpose(t::transpose(r, 1, 2), 0, 1), inv);
      const Tensor att = layer.attention(x, x, x, &mask, &bias);
      x = nn::mask_rows(layer.norm1(t::add(x, att)), in.valid);
      x = nn::mask_rows(layer.norm2(t::add(x, layer.ffn(x))), in.valid);
    }
  }
  ctx.tokens = x;
  return ctx;
}

SceneContext SceneEncoder::operator()(const SceneInputs & in) const
{
  return refine(embed(in), in);
}

Tensor SceneEncoder::dense_prediction(const SceneContext & ctx) const
{
  const Tensor raw = dense_head_(ctx.agents());
  return t::scale(t::reshape(raw, {ctx.n_agents, config_.future_steps, 2}), config_.position_scale);
}

}  // namespace trajplan::encoder
