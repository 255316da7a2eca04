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


#include "trajplan/nn.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace trajplan::nn
{

namespace t = tensor;

Tensor ParameterStore::add(const std::string & name, Shape shape, double bound, Rng & rng)
{
  std::vector<double> v(t::numel(shape), 0.0);
  if (bound > 0.0) {
    for (double & x : v) x = rng.uniform(-bound, bound);
  }
  Tensor p = Tensor::parameter(std::move(shape), std::move(v));
  entries_.emplace_back(name, p);
  return p;
}

Tensor ParameterStore::add_constant(const std::string & name, Shape shape, double value)
{
  const std::size_t n = t::numel(shape);
  Tensor p = Tensor::parameter(std::move(shape), std::vector<double>(n, value));
  entries_.emplace_back(name, p);
  return p;
}

Tensor ParameterStore::adopt(const std::string & name, Tensor parameter)
{
  if (!parameter.requires_grad()) throw std::invalid_argument("adopt: '" + name + "' is not a parameter");
  entries_.emplace_back(name, parameter);
  return parameter;
}

Tensor ParameterStore::get(const std::string & name) const
{
  for (const auto & [n, p] : entries_) {
    if (n == name) return p;
  }
  throw std::out_of_range("unknown parameter '" + name + "'");
}

std::size_t ParameterStore::scalar_count() const
{
  std::size_t n = 0;
  for (const auto & e : entries_) n += e.second.numel();
  return n;
}

void ParameterStore::zero_grad()
{
  for (auto & e : entries_) e.second.zero_grad();
}

Tensor Linear::operator()(const Tensor & x) const { return t::add(t::matmul(x, weight), bias); }

Linear make_linear(ParameterStore & store, const std::string & name, std::size_t in,
                   std::size_t out, Rng & rng, bool zero_init)
{
  const double bound = zero_init ? 0.0 : 1.0 / std::sqrt(static_cast<double>(in));
  Linear l;
  l.weight = store.add(name + ".weight", {in, out}, bound, rng);
  l.bias = store.add(name + ".bias", {out}, 0.0, rng);
  return l;
}

Tensor LayerNorm::operator()(const Tensor & x) const
{
  return t::add(t::mul(t::layer_norm(x), gain), bias);
}

LayerNorm make_layer_norm(ParameterStore & store, const std::string & name, std::size_t dim)
{
  return {store.add_constant(name + ".gain", {dim}, 1.0),
          store.add_constant(name + ".bias", {dim}, 0.0)};
}

Tensor Mlp::operator()(const Tensor & x) const
{
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i](h);
    if (i + 1 < layers.size()) h = t::relu(h);
  }
  return h;
}

Mlp make_mlp(ParameterStore & store, const std::string & name, const std::vector<std::size_t> & dims,
             Rng & rng, bool zero_last)
{
  if (dims.size() < 2) throw std::invalid_argument("make_mlp: needs at least two sizes");
  Mlp m;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const bool last = i + 2 == dims.size();
    m.layers.push_back(make_linear(store, name + "." + std::to_string(i), dims[i], dims[i + 1],
                                   rng, zero_last && last));
  }
  return m;
}

namespace
{

// [N, D] -> [H, N, D/H]
Tensor split_heads(const Tensor & x, std::size_t heads)
{
  const std::size_t n = x.dim(0), d = x.dim(1);
  return t::transpose(t::reshape(x, {n, heads, d / heads}), 0, 1);
}

}  // namespace

Tensor MultiHeadAttention::project_queries(const Tensor & query) const
{
  return split_heads(q(query), heads);
}

Tensor MultiHeadAttention::operator()(const Tensor & query, const Tensor & key,
                                      const Tensor & value, const Tensor * mask,
                                      const Tensor * bias) const
{
  const std::size_t nq = query.dim(0), d = q.weight.dim(1);
  if (d % heads != 0) throw t::ShapeError("attention: model dim not divisible by heads");
  const std::size_t dh = d / heads;
  const Tensor qh = project_queries(query);
  const Tensor kt = t::transpose(split_heads(k(key), heads), 1, 2);
  const Tensor vh = split_heads(v(value), heads);
  Tensor scores = t::scale(t::matmul(qh, kt), 1.0 / std::sqrt(static_cast<double>(dh)));
  if (bias) scores = t::add(scores, *bias);
  if (mask) scores = t::add(scores, *mask);
  const Tensor mixed = t::matmul(t::softmax(scores), vh);
  return out(t::reshape(t::transpose(mixed, 0, 1), {nq, d}));
}

MultiHeadAttention make_attention(ParameterStore & store, const std::string & name,
                                  std::size_t dim, std::size_t heads, Rng & rng)
{
  MultiHeadAttention a;
  a.heads = heads;
  a.q = make_linear(store, name + ".q", dim, dim, rng);
  a.k = make_linear(store, name + ".k", dim, dim, rng);
  a.v = make_linear(store, name + ".v", dim, dim, rng);
  a.out = make_linear(store, name + ".out", dim, dim, rng);
  return a;
}

void sinusoidal_row(double x, double y, std::size_t dim, double min_wavelength,
                    double max_wavelength, std::vector<double> & out)
{
  const std::size_t freqs = dim / 4;
  for (double c : {x, y}) {
    for (std::size_t f = 0; f < freqs; ++f) {
      const double u = freqs > 1 ? static_cast<double>(f) / static_cast<double>(freqs - 1) : 0.0;
      const double wl = min_wavelength * std::pow(max_wavelength / min_wavelength, u);
      const double a = 2.0 * std::numbers::pi * c / wl;
      out.push_back(std::sin(a));
      out.push_back(std::cos(a));
    }
  }
}

Tensor sinusoidal(const std::vector<kinematics::Point2> & points, std::size_t dim,
                  double min_wavelength, double max_wavelength)
{
  if (dim % 4 != 0) throw t::ShapeError("sinusoidal: dim must be a multiple of 4");
  std::vector<double> v;
  v.reserve(points.size() * dim);
  for (const auto & p : points) sinusoidal_row(p.x, p.y, dim, min_wavelength, max_wavelength, v);
  return Tensor::constant({points.size(), dim}, std::move(v));
}

Tensor sinusoidal(const Tensor & points, std::size_t dim, double min_wavelength,
                  double max_wavelength)
{
  if (dim % 4 != 0) throw t::ShapeError("sinusoidal: dim must be a multiple of 4");
  if (points.rank() != 2 || points.dim(1) != 2) {
    throw t::ShapeError("sinusoidal: points must be [N, 2], got " + t::to_string(points.shape()));
  }
  const std::size_t freqs = dim / 4, n = points.dim(0);
  std::vector<double> w(2 * 2 * freqs, 0.0);
  for (std::size_t f = 0; f < freqs; ++f) {
    const double u = freqs > 1 ? static_cast<double>(f) / static_cast<double>(freqs - 1) : 0.0;
    const double k = 2.0 * std::numbers::pi / (min_wavelength * std::pow(max_wavelength / min_wavelength, u));
    w[f] = k;
    w[2 * freqs + freqs + f] = k;
  }
  const Tensor a = t::reshape(t::matmul(points, Tensor::constant({2, 2 * freqs}, std::move(w))),
                              {n, 2 * freqs, 1});
  return t::reshape(t::concat({t::sin(a), t::cos(a)}, 2), {n, dim});
}

Tensor additive_mask(Shape shape, const std::vector<double> & allow)
{
  std::vector<double> v(allow.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = allow[i] != 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  return Tensor::constant(std::move(shape), std::move(v));
}

Tensor mask_rows(const Tensor & x, const std::vector<double> & valid)
{
  return t::mul(x, Tensor::constant({valid.size(), 1}, valid));
}

}  // namespace trajplan::nn
