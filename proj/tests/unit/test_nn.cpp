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


#include <cmath>
#include <limits>

#include "doctest.h"
#include "trajplan/nn.hpp"
#include "trajplan/rng.hpp"

namespace nn = trajplan::nn;
namespace t = trajplan::tensor;
using t::Tensor;

namespace
{

Tensor random_constant(t::Shape shape, trajplan::Rng & rng)
{
  std::vector<double> v(t::numel(shape));
  for (auto & x : v) x = rng.uniform(-1, 1);
  return Tensor::constant(std::move(shape), std::move(v));
}

Tensor random_parameter(t::Shape shape, trajplan::Rng & rng)
{
  std::vector<double> v(t::numel(shape));
  for (auto & x : v) x = rng.uniform(-1, 1);
  return Tensor::parameter(std::move(shape), std::move(v));
}

}  // namespace

TEST_CASE("parameter store names and shapes")
{
  trajplan::Rng rng(1);
  nn::ParameterStore store;
  const auto lin = nn::make_linear(store, "fc", 3, 5, rng);
  CHECK(lin.weight.shape() == t::Shape{3, 5});
  CHECK(lin.bias.shape() == t::Shape{5});
  CHECK(store.scalar_count() == 20);
  CHECK(store.get("fc.weight").node() == lin.weight.node());
  CHECK_THROWS_AS(store.get("missing"), std::out_of_range);

  const auto zero = nn::make_linear(store, "z", 3, 2, rng, true);
  for (double v : zero.weight.values()) CHECK(v == 0.0);
}

TEST_CASE("linear layer on rank 2 and rank 3 input")
{
  trajplan::Rng rng(2);
  nn::ParameterStore store;
  const auto lin = nn::make_linear(store, "fc", 4, 3, rng);
  const Tensor x = random_constant({2, 5, 4}, rng);
  const Tensor y = lin(x);
  CHECK(y.shape() == t::Shape{2, 5, 3});
  const Tensor row = lin(t::reshape(t::slice(t::slice(x, 0, 1, 2), 1, 2, 3), {1, 4}));
  for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(row[j] - y[(1 * 5 + 2) * 3 + j]) < 1e-14);
}

TEST_CASE("layer norm output statistics")
{
  trajplan::Rng rng(3);
  nn::ParameterStore store;
  const auto ln = nn::make_layer_norm(store, "ln", 8);
  const Tensor y = ln(random_constant({4, 8}, rng));
  for (std::size_t r = 0; r < 4; ++r) {
    double m = 0, v = 0;
    for (std::size_t j = 0; j < 8; ++j) m += y[r * 8 + j] / 8;
    for (std::size_t j = 0; j < 8; ++j) v += (y[r * 8 + j] - m) * (y[r * 8 + j] - m) / 8;
    CHECK(std::abs(m) < 1e-12);
    CHECK(std::abs(v - 1.0) < 1e-3);
  }
}

TEST_CASE("attention: fully masked rows give zeros before the output projection")
{
  trajplan::Rng rng(4);
  nn::ParameterStore store;
  const auto att = nn::make_attention(store, "att", 8, 2, rng);
  const Tensor q = random_constant({3, 8}, rng), kv = random_constant({4, 8}, rng);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> allow(12, 1.0);
  for (std::size_t j = 0; j < 4; ++j) allow[4 + j] = 0.0;
  const Tensor mask = nn::additive_mask({3, 4}, allow);
  CHECK(mask[4] == -inf);
  const Tensor y = att(q, kv, kv, &mask);
  for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(y[8 + j] - att.out.bias[j]) < 1e-14);
}

TEST_CASE("attention ignores masked keys")
{
  trajplan::Rng rng(5);
  nn::ParameterStore store;
  const auto att = nn::make_attention(store, "att", 8, 2, rng);
  const Tensor q = random_constant({2, 8}, rng);
  std::vector<double> kv(4 * 8);
  for (auto & v : kv) v = rng.uniform(-1, 1);
  const Tensor mask = nn::additive_mask({2, 4}, {1, 1, 0, 1, 1, 1, 0, 1});
  const Tensor a = att(q, Tensor::constant({4, 8}, kv), Tensor::constant({4, 8}, kv), &mask);
  for (std::size_t j = 16; j < 24; ++j) kv[j] += 5.0;
  const Tensor b = att(q, Tensor::constant({4, 8}, kv), Tensor::constant({4, 8}, kv), &mask);
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("attention gradients")
{
  trajplan::Rng rng(6);
  nn::ParameterStore store;
  const auto att = nn::make_attention(store, "att", 8, 2, rng);
  const Tensor q = random_parameter({3, 8}, rng), kv = random_parameter({4, 8}, rng);
  const Tensor bias = random_parameter({2, 3, 4}, rng);
  const Tensor mask = nn::additive_mask({3, 4}, {1, 0, 1, 1, 1, 1, 1, 0, 0, 1, 1, 1});
  std::vector<Tensor> leaves{q, kv, bias};
  for (const auto & [name, p] : store.entries()) leaves.push_back(p);
  const auto weights = random_constant({3, 8}, rng);
  const auto r = t::grad_check_leaves(
    [&] { return t::sum(t::mul(att(q, kv, kv, &mask, &bias), weights)); }, leaves, 1e-6);
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("sinusoidal encodings: tensor and point variants agree and differentiate")
{
  const std::vector<trajplan::kinematics::Point2> pts{{0, 0}, {1.5, -2}, {30, 7}};
  const Tensor a = nn::sinusoidal(pts, 16, 1.0, 64.0);
  const Tensor p = Tensor::parameter({3, 2}, {0, 0, 1.5, -2, 30, 7});
  const Tensor b = nn::sinusoidal(p, 16, 1.0, 64.0);
  REQUIRE(a.shape() == b.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
  std::vector<double> row;
  nn::sinusoidal_row(1.5, -2, 16, 1.0, 64.0, row);
  for (std::size_t j = 0; j < 16; ++j) CHECK(std::abs(row[j] - a[16 + j]) < 1e-15);

  trajplan::Rng rng(7);
  const Tensor w = random_constant({3, 16}, rng);
  const auto r = t::grad_check_leaves([&] { return t::sum(t::mul(nn::sinusoidal(p, 16, 1.0, 64.0), w)); }, {p}, 1e-6);
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("mlp with zero last layer outputs zeros; mask_rows zeroes invalid rows")
{
  trajplan::Rng rng(8);
  nn::ParameterStore store;
  const auto mlp = nn::make_mlp(store, "m", {4, 6, 3}, rng, true);
  const Tensor y = mlp(random_constant({5, 4}, rng));
  for (double v : y.values()) CHECK(v == 0.0);
  const Tensor x = random_constant({3, 2}, rng);
  const Tensor m = nn::mask_rows(x, {1, 0, 1});
  CHECK(m[2] == 0.0);
  CHECK(m[3] == 0.0);
  CHECK(m[0] == x[0]);
}
