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
#include <functional>
#include <random>
#include <vector>

#include "doctest.h"
#include "trajplan/tensor.hpp"

namespace t = trajplan::tensor;
using t::Shape;
using t::Tensor;

namespace
{

std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo = -1.5,
                                  double hi = 1.5)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double & x : v) x = u(rng);
  return v;
}

Tensor random_tensor(Shape s, std::uint64_t seed, double lo = -1.5, double hi = 1.5)
{
  const std::size_t n = t::numel(s);
  return Tensor::constant(std::move(s), random_values(n, seed, lo, hi));
}

// Weighted sum so every output coordinate gets a distinct upstream gradient.
Tensor weighted(const Tensor & y, std::uint64_t seed)
{
  return t::sum(t::mul(y, random_tensor(y.shape(), seed)));
}

double check(const std::function<Tensor(const Tensor &)> & f, const Tensor & x)
{
  const auto res = t::grad_check(f, x, 1e-5);
  REQUIRE(res.finite);
  return res.max_rel_error;
}

}  // namespace

TEST_CASE("elementwise and closed-form values")
{
  const Tensor a = Tensor::constant({2}, {1, 2});
  const Tensor b = Tensor::constant({2}, {3, 4});
  const Tensor c = t::add(a, b);
  CHECK(c[0] == 4.0);
  CHECK(c[1] == 6.0);
  CHECK(t::softplus(Tensor::scalar(0.0)).item() == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  const Tensor eye = Tensor::constant({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const Tensor x = random_tensor({3, 4}, 11);
  const Tensor y = t::matmul(eye, x);
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("shape mismatches name both shapes")
{
  const Tensor a = Tensor::zeros({2, 3});
  const Tensor b = Tensor::zeros({4, 5});
  try {
    (void)t::matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const t::ShapeError & e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2,3]") != std::string::npos);
    CHECK(msg.find("[4,5]") != std::string::npos);
  }
  CHECK_THROWS_AS((void)t::add(Tensor::zeros({2, 3}), Tensor::zeros({3, 2})), t::ShapeError);
  CHECK_THROWS_AS((void)t::concat({Tensor::zeros({2, 3}), Tensor::zeros({3, 3})}, 1),
                  t::ShapeError);
  CHECK_THROWS_AS((void)t::slice(Tensor::zeros({2, 3}), 1, 2, 5), t::ShapeError);
  CHECK_THROWS_AS((void)Tensor::constant({2, 2}, {1, 2, 3}), t::ShapeError);
}

TEST_CASE("backward basics")
{
  t::Tape tape;
  Tensor x = Tensor::parameter({}, {2.0});
  Tensor y;
  {
    t::TapeScope scope(tape);
    y = t::scale(x, 3.0);
  }
  tape.backward(y);
  CHECK(x.grad()[0] == 3.0);

  SUBCASE("repeated calls accumulate")
  {
    tape.backward(y);
    CHECK(x.grad()[0] == 6.0);
    x.zero_grad();
    tape.backward(y);
    CHECK(x.grad()[0] == 3.0);
  }

  t::Tape tape2;
  Tensor z = Tensor::parameter({}, {0.0});
  Tensor w;
  {
    t::TapeScope scope(tape2);
    w = t::softplus(z);
  }
  tape2.backward(w);
  CHECK(z.grad()[0] == doctest::Approx(0.5).epsilon(1e-15));

  t::Tape tape3;
  Tensor p = Tensor::parameter({2}, {1.0, 2.0});
  Tensor k;
  {
    t::TapeScope scope(tape3);
    k = t::add(t::scale(t::sum(p), 0.0), Tensor::scalar(5.0));
  }
  tape3.backward(k);
  CHECK(p.grad()[0] == 0.0);
  CHECK(p.grad()[1] == 0.0);
}

TEST_CASE("backward rejects non-scalar outputs")
{
  t::Tape tape;
  Tensor x = Tensor::parameter({2}, {1, 2});
  Tensor y;
  {
    t::TapeScope scope(tape);
    y = t::scale(x, 2.0);
  }
  CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);
}

TEST_CASE("no recording without a tape or without grad-requiring inputs")
{
  Tensor x = Tensor::parameter({2}, {1, 2});
  (void)t::tanh(x);
  t::Tape tape;
  {
    t::TapeScope scope(tape);
    (void)t::tanh(Tensor::constant({2}, {1, 2}));
    CHECK(tape.size() == 0);
    {
      t::NoTapeScope off;
      (void)t::tanh(x);
    }
    CHECK(tape.size() == 0);
    (void)t::tanh(x);
  }
  CHECK(tape.size() == 1);
  CHECK(t::active_tape() == nullptr);
}

TEST_CASE("grad_check on a polynomial")
{
  const auto res = t::grad_check([](const Tensor & x) { return t::sum(t::square(x)); },
                                 Tensor::constant({}, {3.0}), 1e-5);
  CHECK(res.finite);
  CHECK(res.max_rel_error < 1e-6);
}

TEST_CASE("grad_check reports non-finite values with coordinate")
{
  const auto res = t::grad_check([](const Tensor & x) { return t::sum(t::log(x)); },
                                 Tensor::constant({3}, {1.0, 1e-6, 2.0}), 1e-5);
  CHECK_FALSE(res.finite);
  REQUIRE(res.non_finite_index.has_value());
  CHECK(*res.non_finite_index == 1);
}

TEST_CASE("primitive gradients match central differences")
{
  const double tol = 1e-5;
  SUBCASE("matmul 2d")
  {
    const Tensor b = random_tensor({4, 3}, 2);
    CHECK(check([&](const Tensor & a) { return weighted(t::matmul(a, b), 9); },
                random_tensor({5, 4}, 1)) < tol);
    const Tensor a = random_tensor({5, 4}, 3);
    CHECK(check([&](const Tensor & bb) { return weighted(t::matmul(a, bb), 9); },
                random_tensor({4, 3}, 4)) < tol);
  }
  SUBCASE("matmul batched")
  {
    const Tensor b = random_tensor({2, 4, 3}, 5);
    CHECK(check([&](const Tensor & a) { return weighted(t::matmul(a, b), 9); },
                random_tensor({2, 5, 4}, 6)) < tol);
    const Tensor a = random_tensor({2, 5, 4}, 7);
    CHECK(check([&](const Tensor & bb) { return weighted(t::matmul(a, bb), 9); },
                random_tensor({2, 4, 3}, 8)) < tol);
  }
  SUBCASE("matmul 3d by shared 2d")
  {
    const Tensor a = random_tensor({3, 2, 4}, 10);
    CHECK(check([&](const Tensor & bb) { return weighted(t::matmul(a, bb), 9); },
                random_tensor({4, 5}, 12)) < tol);
    const Tensor b = random_tensor({4, 5}, 13);
    CHECK(check([&](const Tensor & aa) { return weighted(t::matmul(aa, b), 9); },
                random_tensor({3, 2, 4}, 14)) < tol);
  }
  SUBCASE("broadcast add/sub/mul")
  {
    const Tensor big = random_tensor({3, 2, 4}, 20);
    for (const Shape & s : {Shape{3, 2, 4}, Shape{4}, Shape{2, 1}, Shape{}, Shape{3, 1, 4},
                            Shape{1, 2, 4}}) {
      const Tensor small = random_tensor(s, 21);
      CHECK(check([&](const Tensor & x) { return weighted(t::add(big, x), 22); }, small) < tol);
      CHECK(check([&](const Tensor & x) { return weighted(t::sub(x, big), 22); }, small) < tol);
      CHECK(check([&](const Tensor & x) { return weighted(t::mul(big, x), 22); }, small) < tol);
      CHECK(check([&](const Tensor & x) { return weighted(t::mul(x, small), 22); }, big) < tol);
    }
  }
  SUBCASE("concat and slice")
  {
    const Tensor other = random_tensor({2, 3, 2}, 30);
    for (std::size_t axis : {0u, 1u, 2u}) {
      Shape s{2, 3, 2};
      s[axis] = 1;
      CHECK(check([&](const Tensor & x) { return weighted(t::concat({other, x, other}, axis), 31); },
                  random_tensor(s, 32)) < tol);
      CHECK(check([&](const Tensor & x) { return weighted(t::slice(x, axis, 1, 2), 33); },
                  random_tensor({2, 3, 2}, 34)) < tol);
    }
  }
  SUBCASE("unary")
  {
    const Tensor x = random_tensor({3, 4}, 40);
    CHECK(check([](const Tensor & v) { return weighted(t::relu(v), 41); }, x) < tol);
    CHECK(check([](const Tensor & v) { return weighted(t::tanh(v), 41); }, x) < tol);
    CHECK(check([](const Tensor & v) { return weighted(t::exp(v), 41); }, x) < tol);
    CHECK(check([](const Tensor & v) { return weighted(t::softplus(v), 41); }, x) < tol);
    CHECK(check([](const Tensor & v) { return weighted(t::sin(v), 41); }, x) < tol);
    CHECK(check([](const Tensor & v) { return weighted(t::cos(v), 41); }, x) < tol);
    CHECK(check([](const Tensor & v) { return weighted(t::log(v), 41); },
                random_tensor({3, 4}, 42, 0.2, 3.0)) < tol);
    CHECK(check([](const Tensor & v) { return weighted(t::abs(v), 41); }, x) < tol);
  }
  SUBCASE("softmax, layer_norm")
  {
    const Tensor x = random_tensor({3, 5}, 50);
    CHECK(check([](const Tensor & v) { return weighted(t::softmax(v), 51); }, x) < tol);
    CHECK(check([](const Tensor & v) { return weighted(t::layer_norm(v), 51); }, x) < tol);
  }
  SUBCASE("max_pool with and without mask")
  {
    const Tensor x = random_tensor({2, 4, 3}, 60);
    CHECK(check([](const Tensor & v) { return weighted(t::max_pool(v, 1), 61); }, x) < tol);
    const std::vector<double> mask{1, 0, 1, 1, 0, 0, 0, 0};
    CHECK(check([&](const Tensor & v) { return weighted(t::max_pool(v, 1, &mask), 61); }, x) <
          tol);
  }
  SUBCASE("sum, mean, reshape, transpose")
  {
    const Tensor x = random_tensor({2, 3, 4}, 70);
    CHECK(check([](const Tensor & v) { return t::mean(t::square(v)); }, x) < tol);
    for (std::size_t axis : {0u, 1u, 2u}) {
      CHECK(check([&](const Tensor & v) { return weighted(t::sum(v, axis), 71); }, x) < tol);
      CHECK(check([&](const Tensor & v) { return weighted(t::mean(v, axis), 71); }, x) < tol);
    }
    CHECK(check([](const Tensor & v) { return weighted(t::reshape(v, {6, 4}), 72); }, x) < tol);
    CHECK(check([](const Tensor & v) { return weighted(t::transpose(v, 0, 2), 73); }, x) < tol);
    CHECK(check([](const Tensor & v) { return weighted(t::transpose(v, 1, 2), 73); }, x) < tol);
  }
}

TEST_CASE("softmax rows that are fully masked become zeros")
{
  const double ninf = -std::numeric_limits<double>::infinity();
  const Tensor x = Tensor::constant({2, 3}, {ninf, ninf, ninf, 0.0, ninf, 0.0});
  const Tensor y = t::softmax(x);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
  CHECK(y[2] == 0.0);
  CHECK(y[3] == 0.5);
  CHECK(y[4] == 0.0);
  CHECK(y[5] == 0.5);
}

TEST_CASE("max_pool of nothing is zero")
{
  const Tensor x = random_tensor({1, 3, 2}, 80);
  const std::vector<double> mask{0, 0, 0};
  const Tensor y = t::max_pool(x, 1, &mask);
  CHECK(y.shape() == Shape{1, 2});
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
}

TEST_CASE("transpose matches index definition")
{
  const Tensor x = random_tensor({2, 3, 4}, 90);
  const Tensor y = t::transpose(x, 0, 2);
  CHECK(y.shape() == Shape{4, 3, 2});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 4; ++k) CHECK(y[(k * 3 + j) * 2 + i] == x[(i * 3 + j) * 4 + k]);
}

TEST_CASE("backward is linear")
{
  Tensor x = Tensor::parameter({6}, random_values(6, 100));
  const auto f = [](const Tensor & v) { return t::sum(t::tanh(t::mul(v, v))); };
  const auto g = [](const Tensor & v) { return t::mean(t::softplus(t::scale(v, 1.7))); };
  const auto grad_of = [&](const std::function<Tensor(const Tensor &)> & fn) {
    x.zero_grad();
    t::Tape tape;
    Tensor y;
    {
      t::TapeScope scope(tape);
      y = fn(x);
    }
    tape.backward(y);
    return std::vector<double>(x.grad().begin(), x.grad().end());
  };
  const double a = 0.7, b = -2.3;
  const auto gf = grad_of(f);
  const auto gg = grad_of(g);
  const auto gc = grad_of([&](const Tensor & v) { return t::add(t::scale(f(v), a), t::scale(g(v), b)); });
  for (std::size_t i = 0; i < gc.size(); ++i) {
    CHECK(gc[i] == doctest::Approx(a * gf[i] + b * gg[i]).epsilon(1e-12));
  }
}

TEST_CASE("re-running with identical leaves is bit-identical")
{
  const auto run = []() {
    Tensor w = Tensor::parameter({4, 4}, random_values(16, 110));
    Tensor x = Tensor::constant({3, 4}, random_values(12, 111));
    t::Tape tape;
    Tensor y;
    {
      t::TapeScope scope(tape);
      y = t::sum(t::softmax(t::layer_norm(t::matmul(x, w))));
      y = t::add(y, t::mean(t::max_pool(t::relu(t::matmul(x, w)), 0)));
    }
    tape.backward(y);
    std::vector<double> out{y.item()};
    out.insert(out.end(), w.grad().begin(), w.grad().end());
    return out;
  };
  const auto r1 = run();
  const auto r2 = run();
  REQUIRE(r1.size() == r2.size());
  for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1[i] == r2[i]);
}

TEST_CASE("grad_check_leaves perturbs in place and restores")
{
  Tensor w = Tensor::parameter({3}, {0.3, -0.2, 0.9});
  const auto res =
    t::grad_check_leaves([&]() { return t::sum(t::exp(t::mul(w, w))); }, {w}, 1e-5);
  CHECK(res.finite);
  CHECK(res.max_rel_error < 1e-6);
  CHECK(res.coordinates_checked == 3);
  CHECK(w[0] == 0.3);
  CHECK(w[2] == 0.9);
}
