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


#include "trajplan/decoder.hpp"

#include <algorithm>
#include <stdexcept>

namespace trajplan::decoder
{

namespace t = tensor;

void validate(const DecoderConfig & c)
{
  if (c.d_model == 0 || c.heads == 0 || c.d_model % c.heads != 0 || c.d_model % 4 != 0) {
    throw std::invalid_argument("decoder: d_model must be a multiple of heads and of 4");
  }
  if (c.layers == 0) throw std::invalid_argument("decoder: needs at least one layer");
  if (c.future_steps == 0) throw std::invalid_argument("decoder: future_steps must be positive");
  if (!(c.dt > 0.0)) throw std::invalid_argument("decoder: dt must be positive");
  if (c.dynamic_map == 0) throw std::invalid_argument("decoder: dynamic_map must be positive");
  if (!(c.log_sigma_min < c.log_sigma_max)) throw std::invalid_argument("decoder: bad sigma bounds");
  if (!(c.rho_max > 0.0 && c.rho_max < 1.0)) throw std::invalid_argument("decoder: rho_max in (0, 1)");
}

MotionDecoder::MotionDecoder(nn::ParameterStore & store, const DecoderConfig & config, Rng & rng)
  : config_(config)
{
  validate(config);
  const std::size_t d = config.d_model, tf = config.future_steps;
  static_pe_ = nn::make_mlp(store, "decoder.static_pe", {d, d, d}, rng);
  dynamic_pe_ = nn::make_mlp(store, "decoder.dynamic_pe", {d, d, d}, rng);
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string p = "decoder.layer" + std::to_string(l);
    Layer layer;
    layer.self_attention = nn::make_attention(store, p + ".self", d, config.heads, rng);
    layer.norm1 = nn::make_layer_norm(store, p + ".norm1", d);
    layer.cross_attention = nn::make_attention(store, p + ".cross", d, config.heads, rng);
    layer.center = nn::make_linear(store, p + ".center", d, d, rng);
    layer.norm2 = nn::make_layer_norm(store, p + ".norm2", d);
    layer.ffn = nn::make_mlp(store, p + ".ffn", {d, 2 * d, d}, rng);
    layer.norm3 = nn::make_layer_norm(store, p + ".norm3", d);
    layer.gmm_head = nn::make_mlp(store, p + ".gmm", {d, d, tf * 5}, rng, true);
    layer.control_head = nn::make_mlp(store, p + ".control", {d, d, tf * 2}, rng);
    layer.score_head = nn::make_mlp(store, p + ".score", {d, d, 1}, rng, true);
    layers_.push_back(std::move(layer));
  }
}

std::vector<double> MotionDecoder::cross_mask(const encoder::SceneContext & ctx,
                                              const std::vector<Point2> & search) const
{
  const std::size_t n = ctx.valid.size(), k = search.size();
  const std::size_t map_begin = ctx.n_agents, map_end = ctx.n_agents + ctx.n_map;
  std::vector<double> allow(k * n, 0.0);
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t q = 0; q < k; ++q) {
    double * row = &allow[q * n];
    for (std::size_t j = 0; j < n; ++j) {
      if ((j < map_begin || j >= map_end) && ctx.valid[j] != 0.0) row[j] = 1.0;
    }
    order.clear();
    for (std::size_t j = map_begin; j < map_end; ++j) {
      if (ctx.valid[j] == 0.0) continue;
      const double dx = ctx.positions[j].x - search[q].x;
      const double dy = ctx.positions[j].y - search[q].y;
      order.push_back({dx * dx + dy * dy, j});
    }
    const std::size_t m = std::min(config_.dynamic_map, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end());
    for (std::size_t i = 0; i < m; ++i) row[order[i].second] = 1.0;
  }
  return allow;
}

std::vector<Point2> prior_endpoints(const std::vector<Point2> & anchors, double speed,
                                    double horizon)
{
  std::vector<Point2> out;
  const double reach = speed * horizon;
  for (const Point2 & a : anchors) {
    const double r = std::hypot(a.x, a.y);
    if (r < 1e-9) {
      out.push_back({reach, 0.0});
    } else {
      out.push_back({a.x * reach / r, a.y * reach / r});
    }
  }
  return out;
}

LayerPrediction MotionDecoder::heads(const Layer & layer, const Tensor & c,
                                     const std::vector<Point2> & prior) const
{
  const std::size_t k = c.dim(0), tf = config_.future_steps;
  // Means are residuals over a constant-speed ramp toward each prior endpoint.
  std::vector<double> rx(k * tf), ry(k * tf);
  for (std::size_t m = 0; m < k; ++m) {
    for (std::size_t s = 0; s < tf; ++s) {
      const double f = static_cast<double>(s + 1) / static_cast<double>(tf);
      rx[m * tf + s] = f * prior[m].x;
      ry[m * tf + s] = f * prior[m].y;
    }
  }
  const Tensor g = t::reshape(layer.gmm_head(c), {k, tf, 5});
  const auto channel = [&](const Tensor & x, std::size_t i) {
    return t::reshape(t::slice(x, 2, i, i + 1), {k, tf});
  };
  const double mid = 0.5 * (config_.log_sigma_max + config_.log_sigma_min);
  const double half = 0.5 * (config_.log_sigma_max - config_.log_sigma_min);
  LayerPrediction p;
  p.mu_x = t::add(Tensor::constant({k, tf}, std::move(rx)), t::scale(channel(g, 0), config_.position_scale));
  p.mu_y = t::add(Tensor::constant({k, tf}, std::move(ry)), t::scale(channel(g, 1), config_.position_scale));
  p.log_sigma_x = t::add_scalar(t::scale(t::tanh(channel(g, 2)), half), mid);
  p.log_sigma_y = t::add_scalar(t::scale(t::tanh(channel(g, 3)), half), mid);
  p.rho = t::scale(t::tanh(channel(g, 4)), config_.rho_max);
  const Tensor u = t::reshape(layer.control_head(c), {k, tf, 2});
  p.speed = t::scale(t::add_scalar(t::tanh(channel(u, 0)), 1.0), 0.5 * config_.speed_max);
  p.yaw_rate = t::scale(t::tanh(channel(u, 1)), config_.yaw_rate_max);
  p.scores = t::softmax(t::reshape(layer.score_head(c), {1, k}));
  return p;
}

Prediction MotionDecoder::operator()(const encoder::SceneContext & ctx,
                                     const std::vector<Point2> & anchors,
                                     const Tensor & embedding) const
{
  if (anchors.empty()) throw std::invalid_argument("decoder: no intention points");
  const std::size_t k = anchors.size(), d = config_.d_model, n = ctx.valid.size();
  if (embedding.numel() != d) {
    throw t::ShapeError("decoder: command embedding has shape " + t::to_string(embedding.shape()));
  }
  const auto sine = [&](const std::vector<Point2> & pts) {
    return nn::sinusoidal(pts, d, config_.pe_min_wavelength, config_.pe_max_wavelength);
  };
  const Tensor static_pe = static_pe_(sine(anchors));
  const Tensor keys = t::add(ctx.tokens, dynamic_pe_(sine(ctx.positions)));

  Prediction out;
  out.anchors = anchors;
  Tensor c = t::add(Tensor::zeros({k, d}), t::reshape(embedding, {1, d}));
  std::vector<Point2> search = anchors;
  const auto prior = prior_endpoints(anchors, ctx.center_speed,
                                     static_cast<double>(config_.future_steps) * config_.dt);
  Tensor search_points;  // differentiable copy of `search` once predicted
  const Tensor center = t::slice(ctx.tokens, 0, 0, 1);
  for (const Layer & layer : layers_) {
    const Tensor qs = t::add(c, static_pe);
    c = layer.norm1(t::add(c, layer.self_attention(qs, qs, c)));
    const Tensor mask = nn::additive_mask({k, n}, cross_mask(ctx, search));
    const Tensor search_pe = search_points.defined()
                               ? nn::sinusoidal(search_points, d, config_.pe_min_wavelength,
                                                config_.pe_max_wavelength)
                               : sine(search);
    const Tensor qc = t::add(c, dynamic_pe_(search_pe));
    c = layer.norm2(t::add(t::add(c, layer.cross_attention(qc, keys, ctx.tokens, &mask)),
                           layer.center(center)));
    c = layer.norm3(t::add(c, layer.ffn(c)));
    out.layers.push_back(heads(layer, c, prior));
    const LayerPrediction & last = out.layers.back();
    search = endpoints(last);
    const std::size_t tf = last.mu_x.dim(1);
    search_points = t::concat({t::slice(last.mu_x, 1, tf - 1, tf), t::slice(last.mu_y, 1, tf - 1, tf)}, 1);
  }
  return out;
}

std::vector<Point2> endpoints(const LayerPrediction & p)
{
  const std::size_t k = p.mu_x.dim(0), tf = p.mu_x.dim(1);
  std::vector<Point2> e(k);
  for (std::size_t m = 0; m < k; ++m) e[m] = {p.mu_x[m * tf + tf - 1], p.mu_y[m * tf + tf - 1]};
  return e;
}

}  // namespace trajplan::decoder
