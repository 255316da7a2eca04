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

// Dense double-precision tensors with tape-based reverse-mode
// differentiation.
//
// A Tape records primitive applications while a TapeScope is active on the
// current thread. With no active tape the primitives only compute values,
// which is how inference and finite-difference evaluation run.
//
// Gradients of leaves accumulate across backward() calls until zero_grad();
// gradients of intermediate nodes are recomputed on every call.
//
// Elementwise binary primitives broadcast NumPy-style (shapes right-aligned,
// extent 1 stretches).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace trajplan::tensor
{

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape & shape);
std::string to_string(const Shape & shape);

class ShapeError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

struct Node
{
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient reaches the node
  bool requires_grad = false;
};

class Tensor
{
public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  // Leaf that collects gradients.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape & shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const double> values() const { return node_->value; }
  // Direct write access; meant for leaves (parameters, inputs).
  std::span<double> mutable_values() { return node_->value; }
  double item() const;
  double operator[](std::size_t flat_index) const { return node_->value[flat_index]; }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool has_grad() const { return node_ && !node_->grad.empty(); }
  // Empty span when no gradient has been accumulated.
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad();
  void zero_grad();

  // Same values, no history, never requires grad.
  Tensor detach() const;

  const std::shared_ptr<Node> & node() const { return node_; }
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

private:
  std::shared_ptr<Node> node_;
};

enum class Op : std::uint8_t {
  MatMul,
  Add,
  Sub,
  Mul,
  Concat,
  Slice,
  Relu,
  Tanh,
  Exp,
  Log,
  Softplus,
  Softmax,
  LayerNorm,
  MaxPool,
  Sum,
  Mean,
  Sin,
  Cos,
  Reshape,
  Transpose,
};

const char * op_name(Op op);

struct TapeRecord
{
  Op op;
  std::vector<std::shared_ptr<Node>> inputs;
  std::shared_ptr<Node> output;
  std::vector<double> saved;
  std::vector<std::int64_t> attrs;
};

class Tape
{
public:
  void record(TapeRecord rec) { records_.push_back(std::move(rec)); }
  const std::vector<TapeRecord> & records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  void clear() { records_.clear(); }

  // Propagates d(output)/d(leaf) into every leaf reachable through the tape.
  // Throws std::invalid_argument unless output holds exactly one element.
  void backward(const Tensor & output);

private:
  std::vector<TapeRecord> records_;
};

// Makes `tape` the recording target for the current thread until
// destruction. Scopes nest; the innermost wins.
class TapeScope
{
public:
  explicit TapeScope(Tape & tape);
  ~TapeScope();
  TapeScope(const TapeScope &) = delete;
  TapeScope & operator=(const TapeScope &) = delete;

private:
  Tape * previous_;
};

// Suspends recording (e.g. for finite-difference probes).
class NoTapeScope
{
public:
  NoTapeScope();
  ~NoTapeScope();
  NoTapeScope(const NoTapeScope &) = delete;
  NoTapeScope & operator=(const NoTapeScope &) = delete;

private:
  Tape * previous_;
};

Tape * active_tape();

// ----------------------------------------------------------------------------
// Primitives

// [m,k]x[k,n], [b,m,k]x[b,k,n] or [b,m,k]x[k,n].
Tensor matmul(const Tensor & a, const Tensor & b);
Tensor add(const Tensor & a, const Tensor & b);
Tensor sub(const Tensor & a, const Tensor & b);
Tensor mul(const Tensor & a, const Tensor & b);
Tensor concat(const std::vector<Tensor> & parts, std::size_t axis);
Tensor slice(const Tensor & x, std::size_t axis, std::size_t begin, std::size_t end);
Tensor relu(const Tensor & x);
Tensor tanh(const Tensor & x);
Tensor exp(const Tensor & x);
Tensor log(const Tensor & x);
Tensor softplus(const Tensor & x);
Tensor sin(const Tensor & x);
Tensor cos(const Tensor & x);
// Over the last axis. A row whose entries are all -inf maps to zeros.
Tensor softmax(const Tensor & x);
// Over the last axis, no affine part.
Tensor layer_norm(const Tensor & x, double eps = 1e-5);
// Max over `axis`. `mask`, if given, has the shape of x up to and including
// `axis`; entries with mask 0 are ignored. Pooling nothing yields 0.
Tensor max_pool(const Tensor & x, std::size_t axis, const std::vector<double> * mask = nullptr);
Tensor sum(const Tensor & x);
Tensor sum(const Tensor & x, std::size_t axis);
Tensor mean(const Tensor & x);
Tensor mean(const Tensor & x, std::size_t axis);
Tensor reshape(const Tensor & x, Shape shape);
Tensor transpose(const Tensor & x, std::size_t axis0, std::size_t axis1);

// Conveniences built from the primitives above.
Tensor scale(const Tensor & x, double factor);
Tensor add_scalar(const Tensor & x, double value);
Tensor operator+(const Tensor & a, const Tensor & b);
Tensor operator-(const Tensor & a, const Tensor & b);
Tensor operator*(const Tensor & a, const Tensor & b);
Tensor operator*(const Tensor & a, double s);
Tensor operator*(double s, const Tensor & a);
Tensor operator-(const Tensor & a);
// |x| as relu(x) + relu(-x); subgradient 0 at the kink.
Tensor abs(const Tensor & x);
Tensor square(const Tensor & x);

// ----------------------------------------------------------------------------
// Finite-difference checking

struct GradCheckResult
{
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  bool finite = true;
  // Index of the coordinate whose probe produced a non-finite value.
  std::optional<std::size_t> non_finite_index;
  std::size_t coordinates_checked = 0;
  std::string message;
};

// max_i |analytic_i - fd_i| / max(1, |fd_i|) with central differences.
GradCheckResult grad_check(const std::function<Tensor(const Tensor &)> & function,
                           const Tensor & point, double step);

// Same measure over existing leaves, perturbed in place and restored.
// `coordinates[i]` lists the flat indices to probe in leaves[i]; an empty
// list probes every coordinate.
GradCheckResult grad_check_leaves(const std::function<Tensor()> & loss,
                                  const std::vector<Tensor> & leaves, double step,
                                  const std::vector<std::vector<std::size_t>> & coordinates = {});

}  // namespace trajplan::tensor
