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

// Layers assembled from tensor primitives, plus the named parameter store
// that checkpoints and the optimizer work on.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "trajplan/kinematics.hpp"
#include "trajplan/rng.hpp"
#include "trajplan/tensor.hpp"

namespace trajplan::nn
{

using tensor::Shape;
using tensor::Tensor;

class ParameterStore
{
public:
  // Uniform in [-bound, bound]; bound 0 gives zeros.
  Tensor add(const std::string & name, Shape shape, double bound, Rng & rng);
  Tensor add_constant(const std::string & name, Shape shape, double value);
  // Registers an existing parameter tensor.
  Tensor adopt(const std::string & name, Tensor parameter);

  const std::vector<std::pair<std::string, Tensor>> & entries() const { return entries_; }
  // Throws std::out_of_range for unknown names.
  Tensor get(const std::string & name) const;
  std::size_t scalar_count() const;
  void zero_grad();

private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

struct Linear
{
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]

  // x is [..., in] with rank 2 or 3.
  Tensor operator()(const Tensor & x) const;
};

Linear make_linear(ParameterStore & store, const std::string & name, std::size_t in,
                   std::size_t out, Rng & rng, bool zero_init = false);

struct LayerNorm
{
  Tensor gain;
  Tensor bias;
  Tensor operator()(const Tensor & x) const;
};

LayerNorm make_layer_norm(ParameterStore & store, const std::string & name, std::size_t dim);

// Linear layers with ReLU in between (none after the last).
struct Mlp
{
  std::vector<Linear> layers;
  Tensor operator()(const Tensor & x) const;
};

Mlp make_mlp(ParameterStore & store, const std::string & name, const std::vector<std::size_t> & dims,
             Rng & rng, bool zero_last = false);

struct MultiHeadAttention
{
  std::size_t heads = 1;
  Linear q, k, v, out;

  // query [Nq, D], key/value [Nk, D]. mask (optional) is an additive
  // [Nq, Nk] constant holding 0 or -inf; bias (optional) is added to the
  // scaled scores and shaped [H, Nq, Nk]. A query row with every key masked
  // yields zeros before the output projection.
  Tensor operator()(const Tensor & query, const Tensor & key, const Tensor & value,
                    const Tensor * mask = nullptr, const Tensor * bias = nullptr) const;

  // Per-head query projections [H, Nq, dh], exposed for score biases that
  // depend on the query.
  Tensor project_queries(const Tensor & query) const;
};

MultiHeadAttention make_attention(ParameterStore & store, const std::string & name,
                                  std::size_t dim, std::size_t heads, Rng & rng);

// Sine/cosine features of 2D points: for each axis, dim/4 wavelengths
// spaced geometrically over [min_wavelength, max_wavelength]. Result [N, dim].
Tensor sinusoidal(const std::vector<kinematics::Point2> & points, std::size_t dim,
                  double min_wavelength, double max_wavelength);
// Differentiable variant over a [N, 2] tensor of points; same layout.
Tensor sinusoidal(const Tensor & points, std::size_t dim, double min_wavelength,
                  double max_wavelength);
// Raw values for a single point, appended to `out`.
void sinusoidal_row(double x, double y, std::size_t dim, double min_wavelength,
                    double max_wavelength, std::vector<double> & out);

// Additive 0/-inf mask from a 0/1 allow matrix.
Tensor additive_mask(Shape shape, const std::vector<double> & allow);

// x * mask where mask is a [N] 0/1 row validity vector and x is [N, D].
Tensor mask_rows(const Tensor & x, const std::vector<double> & valid);

}  // namespace trajplan::nn
