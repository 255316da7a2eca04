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

#include "trajplan/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "trajplan/simd/kernels.hpp"

namespace trajplan::tensor
{
namespace
{

thread_local Tape * g_active_tape = nullptr;

using NodePtr = std::shared_ptr<Node>;

bool needs_record(std::initializer_list<const Tensor *> inputs)
{
  if (g_active_tape == nullptr) return false;
  for (const Tensor * t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

Tensor finish(Op op, Shape shape, std::vector<double> value, std::vector<NodePtr> inputs,
              bool record, std::vector<double> saved = {}, std::vector<std::int64_t> attrs = {})
{
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (record) {
    node->requires_grad = true;
    g_active_tape->record(
      TapeRecord{op, std::move(inputs), node, std::move(saved), std::move(attrs)});
  }
  return Tensor(std::move(node));
}

void require_defined(const Tensor & t, const char * what)
{
  if (!t.defined()) throw ShapeError(std::string(what) + ": undefined tensor");
}

std::vector<double> & grad_of(Node & node)
{
  if (node.grad.empty()) node.grad.assign(node.value.size(), 0.0);
  return node.grad;
}

// ----------------------------------------------------------------------------
// Broadcasting

enum class BcKind { Same, BScalar, AScalar, BSuffix, ASuffix, General };

struct Broadcast
{
  Shape out;
  BcKind kind = BcKind::Same;
  std::size_t na = 0;
  std::size_t nb = 0;
  std::vector<std::size_t> a_off;
  std::vector<std::size_t> b_off;
};

Shape strip_leading_ones(const Shape & s)
{
  std::size_t i = 0;
  while (i < s.size() && s[i] == 1) ++i;
  return Shape(s.begin() + static_cast<std::ptrdiff_t>(i), s.end());
}

bool is_suffix(const Shape & small, const Shape & big)
{
  const Shape s = strip_leading_ones(small);
  if (s.size() > big.size()) return false;
  return std::equal(s.begin(), s.end(), big.end() - static_cast<std::ptrdiff_t>(s.size()));
}

Broadcast plan_broadcast(const Shape & a, const Shape & b, const char * op)
{
  Broadcast bc;
  bc.na = numel(a);
  bc.nb = numel(b);
  const std::size_t r = std::max(a.size(), b.size());
  bc.out.assign(r, 1);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    const std::size_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError(std::string(op) + ": cannot broadcast " + to_string(a) + " with " +
                       to_string(b));
    }
    bc.out[i] = std::max(da, db);
  }
  const std::size_t nout = numel(bc.out);
  if (a == b) {
    bc.kind = BcKind::Same;
  } else if (bc.nb == 1 && bc.na == nout) {
    bc.kind = BcKind::BScalar;
  } else if (bc.na == 1 && bc.nb == nout) {
    bc.kind = BcKind::AScalar;
  } else if (bc.na == nout && is_suffix(b, a)) {
    bc.kind = bc.na == bc.nb ? BcKind::Same : BcKind::BSuffix;
  } else if (bc.nb == nout && is_suffix(a, b)) {
    bc.kind = bc.na == bc.nb ? BcKind::Same : BcKind::ASuffix;
  } else {
    bc.kind = BcKind::General;
    auto strides_for = [&](const Shape & s) {
      std::vector<std::size_t> st(r, 0);
      std::size_t acc = 1;
      for (std::size_t i = s.size(); i-- > 0;) {
        const std::size_t ax = i + (r - s.size());
        st[ax] = s[i] == 1 ? 0 : acc;
        acc *= s[i];
      }
      return st;
    };
    const auto sa = strides_for(a);
    const auto sb = strides_for(b);
    bc.a_off.resize(nout);
    bc.b_off.resize(nout);
    std::vector<std::size_t> idx(r, 0);
    std::size_t oa = 0, ob = 0;
    for (std::size_t flat = 0; flat < nout; ++flat) {
      bc.a_off[flat] = oa;
      bc.b_off[flat] = ob;
      for (std::size_t ax = r; ax-- > 0;) {
        ++idx[ax];
        oa += sa[ax];
        ob += sb[ax];
        if (idx[ax] < bc.out[ax]) break;
        oa -= sa[ax] * idx[ax];
        ob -= sb[ax] * idx[ax];
        idx[ax] = 0;
      }
    }
  }
  return bc;
}

template <class F>
void visit(const Broadcast & bc, F && f)
{
  const std::size_t nout = numel(bc.out);
  switch (bc.kind) {
    case BcKind::Same:
      for (std::size_t i = 0; i < nout; ++i) f(i, i, i);
      break;
    case BcKind::BScalar:
      for (std::size_t i = 0; i < nout; ++i) f(i, i, std::size_t{0});
      break;
    case BcKind::AScalar:
      for (std::size_t i = 0; i < nout; ++i) f(i, std::size_t{0}, i);
      break;
    case BcKind::BSuffix:
      for (std::size_t o = 0, blk = 0; o < nout; o += bc.nb, ++blk) {
        for (std::size_t j = 0; j < bc.nb; ++j) f(o + j, o + j, j);
      }
      break;
    case BcKind::ASuffix:
      for (std::size_t o = 0; o < nout; o += bc.na) {
        for (std::size_t j = 0; j < bc.na; ++j) f(o + j, j, o + j);
      }
      break;
    case BcKind::General:
      for (std::size_t i = 0; i < nout; ++i) f(i, bc.a_off[i], bc.b_off[i]);
      break;
  }
}

Tensor binary(Op op, const Tensor & a, const Tensor & b)
{
  require_defined(a, op_name(op));
  require_defined(b, op_name(op));
  Broadcast bc = plan_broadcast(a.shape(), b.shape(), op_name(op));
  std::vector<double> out(numel(bc.out));
  const double * av = a.values().data();
  const double * bv = b.values().data();
  const auto & k = simd::kernels();
  if (bc.kind == BcKind::Same && op == Op::Add) {
    k.add(out.size(), av, bv, out.data());
  } else if (bc.kind == BcKind::Same && op == Op::Mul) {
    k.mul(out.size(), av, bv, out.data());
  } else if (op == Op::Add) {
    visit(bc, [&](std::size_t o, std::size_t i, std::size_t j) { out[o] = av[i] + bv[j]; });
  } else if (op == Op::Sub) {
    visit(bc, [&](std::size_t o, std::size_t i, std::size_t j) { out[o] = av[i] - bv[j]; });
  } else {
    visit(bc, [&](std::size_t o, std::size_t i, std::size_t j) { out[o] = av[i] * bv[j]; });
  }
  Shape shape = bc.out;
  return finish(op, std::move(shape), std::move(out), {a.node(), b.node()}, needs_record({&a, &b}));
}

Tensor unary(Op op, const Tensor & x, double (*f)(double))
{
  require_defined(x, op_name(op));
  std::vector<double> out(x.numel());
  const auto v = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(v[i]);
  return finish(op, x.shape(), std::move(out), {x.node()}, needs_record({&x}));
}

double softplus_value(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x)
{
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct Split
{
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

Split split_at(const Shape & s, std::size_t axis)
{
  Split sp;
  for (std::size_t i = 0; i < axis; ++i) sp.outer *= s[i];
  sp.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) sp.inner *= s[i];
  return sp;
}

Tensor reduce_axis(Op op, const Tensor & x, std::size_t axis)
{
  require_defined(x, op_name(op));
  if (axis >= x.rank()) {
    throw ShapeError(std::string(op_name(op)) + ": axis " + std::to_string(axis) +
                     " out of range for " + to_string(x.shape()));
  }
  const Split sp = split_at(x.shape(), axis);
  std::vector<double> out(sp.outer * sp.inner, 0.0);
  const auto v = x.values();
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t p = 0; p < sp.extent; ++p) {
      const double * src = v.data() + (o * sp.extent + p) * sp.inner;
      double * dst = out.data() + o * sp.inner;
      for (std::size_t i = 0; i < sp.inner; ++i) dst[i] += src[i];
    }
  }
  if (op == Op::Mean && sp.extent > 0) {
    for (double & d : out) d /= static_cast<double>(sp.extent);
  }
  Shape shape = x.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  return finish(op, std::move(shape), std::move(out), {x.node()}, needs_record({&x}), {},
                {static_cast<std::int64_t>(axis)});
}

// Maps an input flat index to the transposed output flat index.
std::vector<std::size_t> transpose_map(const Shape & in, std::size_t a0, std::size_t a1)
{
  const std::size_t r = in.size();
  Shape out = in;
  std::swap(out[a0], out[a1]);
  std::vector<std::size_t> out_strides(r, 1);
  for (std::size_t i = r; i-- > 1;) out_strides[i - 1] = out_strides[i] * out[i];
  std::vector<std::size_t> in_to_out_stride(r);
  for (std::size_t ax = 0; ax < r; ++ax) {
    std::size_t oax = ax == a0 ? a1 : (ax == a1 ? a0 : ax);
    in_to_out_stride[ax] = out_strides[oax];
  }
  const std::size_t n = numel(in);
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> idx(r, 0);
  std::size_t off = 0;
  for (std::size_t flat = 0; flat < n; ++flat) {
    map[flat] = off;
    for (std::size_t ax = r; ax-- > 0;) {
      ++idx[ax];
      off += in_to_out_stride[ax];
      if (idx[ax] < in[ax]) break;
      off -= in_to_out_stride[ax] * idx[ax];
      idx[ax] = 0;
    }
  }
  return map;
}

// ----------------------------------------------------------------------------
// Backward rules

void accumulate_broadcast_grad(const TapeRecord & rec)
{
  Node & a = *rec.inputs[0];
  Node & b = *rec.inputs[1];
  const std::vector<double> & g = rec.output->grad;
  Broadcast bc = plan_broadcast(a.shape, b.shape, op_name(rec.op));
  const bool ga_needed = a.requires_grad;
  const bool gb_needed = b.requires_grad;
  double * ga = ga_needed ? grad_of(a).data() : nullptr;
  double * gb = gb_needed ? grad_of(b).data() : nullptr;
  const double * av = a.value.data();
  const double * bv = b.value.data();
  const auto & k = simd::kernels();
  switch (rec.op) {
    case Op::Add:
      if (bc.kind == BcKind::Same) {
        if (ga) k.axpy(g.size(), 1.0, g.data(), ga);
        if (gb) k.axpy(g.size(), 1.0, g.data(), gb);
        return;
      }
      visit(bc, [&](std::size_t o, std::size_t i, std::size_t j) {
        if (ga) ga[i] += g[o];
        if (gb) gb[j] += g[o];
      });
      return;
    case Op::Sub:
      visit(bc, [&](std::size_t o, std::size_t i, std::size_t j) {
        if (ga) ga[i] += g[o];
        if (gb) gb[j] -= g[o];
      });
      return;
    case Op::Mul:
      visit(bc, [&](std::size_t o, std::size_t i, std::size_t j) {
        if (ga) ga[i] += g[o] * bv[j];
        if (gb) gb[j] += g[o] * av[i];
      });
      return;
    default:
      return;
  }
}

void backward_record(const TapeRecord & rec)
{
  const std::vector<double> & g = rec.output->grad;
  const std::vector<double> & y = rec.output->value;
  Node & x = *rec.inputs[0];
  const auto & k = simd::kernels();
  switch (rec.op) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
      accumulate_broadcast_grad(rec);
      return;
    case Op::MatMul: {
      Node & a = *rec.inputs[0];
      Node & b = *rec.inputs[1];
      const auto mode = rec.attrs[0];
      const auto batch = static_cast<std::size_t>(rec.attrs[1]);
      const auto m = static_cast<std::size_t>(rec.attrs[2]);
      const auto kk = static_cast<std::size_t>(rec.attrs[3]);
      const auto n = static_cast<std::size_t>(rec.attrs[4]);
      if (mode == 0) {
        // b shared across the (possibly flattened) batch.
        const std::size_t rows = batch * m;
        if (a.requires_grad) k.gemm_nt(rows, kk, n, g.data(), b.value.data(), grad_of(a).data());
        if (b.requires_grad) k.gemm_tn(kk, n, rows, a.value.data(), g.data(), grad_of(b).data());
      } else {
        for (std::size_t bi = 0; bi < batch; ++bi) {
          const double * gb = g.data() + bi * m * n;
          if (a.requires_grad) {
            k.gemm_nt(m, kk, n, gb, b.value.data() + bi * kk * n,
                      grad_of(a).data() + bi * m * kk);
          }
          if (b.requires_grad) {
            k.gemm_tn(kk, n, m, a.value.data() + bi * m * kk, gb,
                      grad_of(b).data() + bi * kk * n);
          }
        }
      }
      return;
    }
    case Op::Concat: {
      const auto axis = static_cast<std::size_t>(rec.attrs[0]);
      const Split sp = split_at(rec.output->shape, axis);
      std::size_t offset = 0;
      for (std::size_t p = 0; p < rec.inputs.size(); ++p) {
        Node & in = *rec.inputs[p];
        const std::size_t ext = in.shape[axis];
        if (in.requires_grad) {
          double * gi = grad_of(in).data();
          for (std::size_t o = 0; o < sp.outer; ++o) {
            const double * src = g.data() + (o * sp.extent + offset) * sp.inner;
            double * dst = gi + o * ext * sp.inner;
            for (std::size_t i = 0; i < ext * sp.inner; ++i) dst[i] += src[i];
          }
        }
        offset += ext;
      }
      return;
    }
    case Op::Slice: {
      if (!x.requires_grad) return;
      const auto axis = static_cast<std::size_t>(rec.attrs[0]);
      const auto begin = static_cast<std::size_t>(rec.attrs[1]);
      const Split sp = split_at(x.shape, axis);
      const std::size_t ext = rec.output->shape[axis];
      double * gx = grad_of(x).data();
      for (std::size_t o = 0; o < sp.outer; ++o) {
        const double * src = g.data() + o * ext * sp.inner;
        double * dst = gx + (o * sp.extent + begin) * sp.inner;
        for (std::size_t i = 0; i < ext * sp.inner; ++i) dst[i] += src[i];
      }
      return;
    }
    default:
      break;
  }

  if (!x.requires_grad) return;
  std::vector<double> & gx = grad_of(x);
  const std::vector<double> & xv = x.value;
  switch (rec.op) {
    case Op::Relu:
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += xv[i] > 0.0 ? g[i] : 0.0;
      return;
    case Op::Tanh:
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
      return;
    case Op::Exp:
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i];
      return;
    case Op::Log:
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] / xv[i];
      return;
    case Op::Softplus:
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * sigmoid(xv[i]);
      return;
    case Op::Sin:
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * std::cos(xv[i]);
      return;
    case Op::Cos:
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] -= g[i] * std::sin(xv[i]);
      return;
    case Op::Softmax: {
      const std::size_t n = x.shape.back();
      for (std::size_t r = 0; r * n < g.size(); ++r) {
        const double * yr = y.data() + r * n;
        const double * gr = g.data() + r * n;
        const double s = k.dot(n, yr, gr);
        double * dst = gx.data() + r * n;
        for (std::size_t j = 0; j < n; ++j) dst[j] += yr[j] * (gr[j] - s);
      }
      return;
    }
    case Op::LayerNorm: {
      const std::size_t n = x.shape.back();
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t r = 0; r * n < g.size(); ++r) {
        const double rstd = rec.saved[r];
        const double * yr = y.data() + r * n;
        const double * gr = g.data() + r * n;
        double gmean = 0.0;
        for (std::size_t j = 0; j < n; ++j) gmean += gr[j];
        gmean *= inv_n;
        const double gy = k.dot(n, gr, yr) * inv_n;
        double * dst = gx.data() + r * n;
        for (std::size_t j = 0; j < n; ++j) dst[j] += rstd * (gr[j] - gmean - yr[j] * gy);
      }
      return;
    }
    case Op::MaxPool: {
      const auto axis = static_cast<std::size_t>(rec.attrs[0]);
      const Split sp = split_at(x.shape, axis);
      for (std::size_t o = 0; o < sp.outer; ++o) {
        for (std::size_t i = 0; i < sp.inner; ++i) {
          const double arg = rec.saved[o * sp.inner + i];
          if (arg < 0.0) continue;
          const auto p = static_cast<std::size_t>(arg);
          gx[(o * sp.extent + p) * sp.inner + i] += g[o * sp.inner + i];
        }
      }
      return;
    }
    case Op::Sum:
    case Op::Mean: {
      if (rec.attrs.empty()) {
        const double v = rec.op == Op::Mean ? g[0] / static_cast<double>(xv.size()) : g[0];
        for (double & d : gx) d += v;
        return;
      }
      const auto axis = static_cast<std::size_t>(rec.attrs[0]);
      const Split sp = split_at(x.shape, axis);
      const double f = rec.op == Op::Mean ? 1.0 / static_cast<double>(sp.extent) : 1.0;
      for (std::size_t o = 0; o < sp.outer; ++o) {
        for (std::size_t p = 0; p < sp.extent; ++p) {
          double * dst = gx.data() + (o * sp.extent + p) * sp.inner;
          const double * src = g.data() + o * sp.inner;
          for (std::size_t i = 0; i < sp.inner; ++i) dst[i] += f * src[i];
        }
      }
      return;
    }
    case Op::Reshape:
      k.axpy(g.size(), 1.0, g.data(), gx.data());
      return;
    case Op::Transpose: {
      const auto map = transpose_map(x.shape, static_cast<std::size_t>(rec.attrs[0]),
                                     static_cast<std::size_t>(rec.attrs[1]));
      for (std::size_t i = 0; i < map.size(); ++i) gx[i] += g[map[i]];
      return;
    }
    default:
      return;
  }
}

}  // namespace

// ----------------------------------------------------------------------------

std::size_t numel(const Shape & shape)
{
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape & shape)
{
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

const char * op_name(Op op)
{
  switch (op) {
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Concat: return "concat";
    case Op::Slice: return "slice";
    case Op::Relu: return "relu";
    case Op::Tanh: return "tanh";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Softplus: return "softplus";
    case Op::Softmax: return "softmax";
    case Op::LayerNorm: return "layer_norm";
    case Op::MaxPool: return "max_pool";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Reshape: return "reshape";
    case Op::Transpose: return "transpose";
  }
  return "?";
}

Tensor Tensor::constant(Shape shape, std::vector<double> values)
{
  if (tensor::numel(shape) != values.size()) {
    throw ShapeError("constant: shape " + to_string(shape) + " needs " +
                     std::to_string(tensor::numel(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value)
{
  const std::size_t n = tensor::numel(shape);
  return constant(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return constant({}, {value}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values)
{
  Tensor t = constant(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

double Tensor::item() const
{
  if (numel() != 1) {
    throw ShapeError("item: expected one element, got shape " + to_string(shape()));
  }
  return node_->value[0];
}

std::span<double> Tensor::mutable_grad() { return grad_of(*node_); }

void Tensor::zero_grad()
{
  if (node_) node_->grad.clear();
}

Tensor Tensor::detach() const { return constant(shape(), node_->value); }

// ----------------------------------------------------------------------------

void Tape::backward(const Tensor & output)
{
  require_defined(output, "backward");
  if (output.numel() != 1) {
    throw std::invalid_argument("backward: output must be scalar, got shape " +
                                to_string(output.shape()));
  }
  for (const TapeRecord & rec : records_) rec.output->grad.clear();
  grad_of(*output.node())[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->output->grad.empty()) continue;
    backward_record(*it);
  }
}

TapeScope::TapeScope(Tape & tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoTapeScope::NoTapeScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoTapeScope::~NoTapeScope() { g_active_tape = previous_; }

Tape * active_tape() { return g_active_tape; }

// ----------------------------------------------------------------------------

Tensor matmul(const Tensor & a, const Tensor & b)
{
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  const auto mismatch = [&]() {
    return ShapeError("matmul: incompatible shapes " + to_string(a.shape()) + " and " +
                      to_string(b.shape()));
  };
  std::size_t batch = 1, m = 0, k = 0, n = 0;
  std::int64_t mode = 0;
  Shape out_shape;
  if (a.rank() == 2 && b.rank() == 2) {
    m = a.dim(0);
    k = a.dim(1);
    if (b.dim(0) != k) throw mismatch();
    n = b.dim(1);
    out_shape = {m, n};
  } else if (a.rank() == 3 && b.rank() == 2) {
    batch = a.dim(0);
    m = a.dim(1);
    k = a.dim(2);
    if (b.dim(0) != k) throw mismatch();
    n = b.dim(1);
    out_shape = {batch, m, n};
  } else if (a.rank() == 3 && b.rank() == 3) {
    batch = a.dim(0);
    m = a.dim(1);
    k = a.dim(2);
    if (b.dim(0) != batch || b.dim(1) != k) throw mismatch();
    n = b.dim(2);
    mode = 1;
    out_shape = {batch, m, n};
  } else {
    throw mismatch();
  }
  std::vector<double> out(batch * m * n, 0.0);
  const auto & kern = simd::kernels();
  if (mode == 0) {
    kern.gemm_nn(batch * m, n, k, a.values().data(), b.values().data(), out.data());
  } else {
    for (std::size_t bi = 0; bi < batch; ++bi) {
      kern.gemm_nn(m, n, k, a.values().data() + bi * m * k, b.values().data() + bi * k * n,
                   out.data() + bi * m * n);
    }
  }
  return finish(Op::MatMul, std::move(out_shape), std::move(out), {a.node(), b.node()},
                needs_record({&a, &b}), {},
                {mode, static_cast<std::int64_t>(batch), static_cast<std::int64_t>(m),
                 static_cast<std::int64_t>(k), static_cast<std::int64_t>(n)});
}

Tensor add(const Tensor & a, const Tensor & b) { return binary(Op::Add, a, b); }
Tensor sub(const Tensor & a, const Tensor & b) { return binary(Op::Sub, a, b); }
Tensor mul(const Tensor & a, const Tensor & b) { return binary(Op::Mul, a, b); }

Tensor concat(const std::vector<Tensor> & parts, std::size_t axis)
{
  if (parts.empty()) throw ShapeError("concat: no inputs");
  for (const auto & p : parts) require_defined(p, "concat");
  const Shape & first = parts.front().shape();
  if (axis >= first.size()) {
    throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for " +
                     to_string(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto & p : parts) {
    const Shape & s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) {
      if (i != axis && s[i] != first[i]) ok = false;
    }
    if (!ok) {
      throw ShapeError("concat: shape " + to_string(s) + " does not match " + to_string(first) +
                       " off axis " + std::to_string(axis));
    }
    out_shape[axis] += s[axis];
  }
  const Split sp = split_at(out_shape, axis);
  std::vector<double> out(numel(out_shape));
  std::size_t offset = 0;
  bool record = false;
  std::vector<NodePtr> inputs;
  inputs.reserve(parts.size());
  for (const auto & p : parts) {
    const std::size_t ext = p.shape()[axis];
    const double * src_base = p.values().data();
    for (std::size_t o = 0; o < sp.outer; ++o) {
      std::copy_n(src_base + o * ext * sp.inner, ext * sp.inner,
                  out.data() + (o * sp.extent + offset) * sp.inner);
    }
    offset += ext;
    record = record || (g_active_tape && p.requires_grad());
    inputs.push_back(p.node());
  }
  return finish(Op::Concat, std::move(out_shape), std::move(out), std::move(inputs), record, {},
                {static_cast<std::int64_t>(axis)});
}

Tensor slice(const Tensor & x, std::size_t axis, std::size_t begin, std::size_t end)
{
  require_defined(x, "slice");
  if (axis >= x.rank() || begin > end || end > x.dim(axis)) {
    throw ShapeError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") on axis " + std::to_string(axis) + " invalid for " +
                     to_string(x.shape()));
  }
  const Split sp = split_at(x.shape(), axis);
  const std::size_t ext = end - begin;
  std::vector<double> out(sp.outer * ext * sp.inner);
  const double * src = x.values().data();
  for (std::size_t o = 0; o < sp.outer; ++o) {
    std::copy_n(src + (o * sp.extent + begin) * sp.inner, ext * sp.inner,
                out.data() + o * ext * sp.inner);
  }
  Shape shape = x.shape();
  shape[axis] = ext;
  return finish(Op::Slice, std::move(shape), std::move(out), {x.node()}, needs_record({&x}), {},
                {static_cast<std::int64_t>(axis), static_cast<std::int64_t>(begin)});
}

Tensor relu(const Tensor & x)
{
  return unary(Op::Relu, x, [](double v) { return v > 0.0 ? v : 0.0; });
}
Tensor tanh(const Tensor & x)
{
  return unary(Op::Tanh, x, [](double v) { return std::tanh(v); });
}
Tensor exp(const Tensor & x)
{
  return unary(Op::Exp, x, [](double v) { return std::exp(v); });
}
Tensor log(const Tensor & x)
{
  return unary(Op::Log, x, [](double v) { return std::log(v); });
}
Tensor softplus(const Tensor & x) { return unary(Op::Softplus, x, softplus_value); }
Tensor sin(const Tensor & x)
{
  return unary(Op::Sin, x, [](double v) { return std::sin(v); });
}
Tensor cos(const Tensor & x)
{
  return unary(Op::Cos, x, [](double v) { return std::cos(v); });
}

Tensor softmax(const Tensor & x)
{
  require_defined(x, "softmax");
  if (x.rank() == 0) throw ShapeError("softmax: needs rank >= 1");
  const std::size_t n = x.shape().back();
  std::vector<double> out(x.numel(), 0.0);
  const auto v = x.values();
  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; n > 0 && r * n < out.size(); ++r) {
    const double * row = v.data() + r * n;
    double * dst = out.data() + r * n;
    const double mx = *std::max_element(row, row + n);
    if (mx == neg_inf) continue;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      dst[j] = std::exp(row[j] - mx);
      s += dst[j];
    }
    const double inv = 1.0 / s;
    for (std::size_t j = 0; j < n; ++j) dst[j] *= inv;
  }
  return finish(Op::Softmax, x.shape(), std::move(out), {x.node()}, needs_record({&x}));
}

Tensor layer_norm(const Tensor & x, double eps)
{
  require_defined(x, "layer_norm");
  if (x.rank() == 0) throw ShapeError("layer_norm: needs rank >= 1");
  const std::size_t n = x.shape().back();
  const std::size_t rows = n ? x.numel() / n : 0;
  std::vector<double> out(x.numel());
  std::vector<double> rstd(rows);
  const auto v = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const double * row = v.data() + r * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    double * dst = out.data() + r * n;
    for (std::size_t j = 0; j < n; ++j) dst[j] = (row[j] - mu) * rstd[r];
  }
  const bool record = needs_record({&x});
  return finish(Op::LayerNorm, x.shape(), std::move(out), {x.node()}, record,
                record ? std::move(rstd) : std::vector<double>{});
}

Tensor max_pool(const Tensor & x, std::size_t axis, const std::vector<double> * mask)
{
  require_defined(x, "max_pool");
  if (axis >= x.rank()) {
    throw ShapeError("max_pool: axis " + std::to_string(axis) + " out of range for " +
                     to_string(x.shape()));
  }
  const Split sp = split_at(x.shape(), axis);
  if (mask && mask->size() != sp.outer * sp.extent) {
    throw ShapeError("max_pool: mask of " + std::to_string(mask->size()) +
                     " entries does not cover " + to_string(x.shape()) + " up to axis " +
                     std::to_string(axis));
  }
  std::vector<double> out(sp.outer * sp.inner, 0.0);
  std::vector<double> arg(sp.outer * sp.inner, -1.0);
  const auto v = x.values();
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t p = 0; p < sp.extent; ++p) {
      if (mask && (*mask)[o * sp.extent + p] == 0.0) continue;
      const double * src = v.data() + (o * sp.extent + p) * sp.inner;
      for (std::size_t i = 0; i < sp.inner; ++i) {
        const std::size_t oi = o * sp.inner + i;
        if (arg[oi] < 0.0 || src[i] > out[oi]) {
          out[oi] = src[i];
          arg[oi] = static_cast<double>(p);
        }
      }
    }
  }
  Shape shape = x.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  const bool record = needs_record({&x});
  return finish(Op::MaxPool, std::move(shape), std::move(out), {x.node()}, record,
                record ? std::move(arg) : std::vector<double>{},
                {static_cast<std::int64_t>(axis)});
}

Tensor sum(const Tensor & x)
{
  require_defined(x, "sum");
  const auto v = x.values();
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  return finish(Op::Sum, {}, {s}, {x.node()}, needs_record({&x}));
}

Tensor sum(const Tensor & x, std::size_t axis) { return reduce_axis(Op::Sum, x, axis); }

Tensor mean(const Tensor & x)
{
  require_defined(x, "mean");
  if (x.numel() == 0) throw ShapeError("mean: empty tensor");
  const auto v = x.values();
  const double s = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  return finish(Op::Mean, {}, {s}, {x.node()}, needs_record({&x}));
}

Tensor mean(const Tensor & x, std::size_t axis) { return reduce_axis(Op::Mean, x, axis); }

Tensor reshape(const Tensor & x, Shape shape)
{
  require_defined(x, "reshape");
  if (numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  return finish(Op::Reshape, std::move(shape), std::move(out), {x.node()}, needs_record({&x}));
}

Tensor transpose(const Tensor & x, std::size_t axis0, std::size_t axis1)
{
  require_defined(x, "transpose");
  if (axis0 >= x.rank() || axis1 >= x.rank()) {
    throw ShapeError("transpose: axes (" + std::to_string(axis0) + "," + std::to_string(axis1) +
                     ") invalid for " + to_string(x.shape()));
  }
  Shape shape = x.shape();
  std::swap(shape[axis0], shape[axis1]);
  std::vector<double> out(x.numel());
  const auto map = transpose_map(x.shape(), axis0, axis1);
  const auto v = x.values();
  for (std::size_t i = 0; i < map.size(); ++i) out[map[i]] = v[i];
  return finish(Op::Transpose, std::move(shape), std::move(out), {x.node()}, needs_record({&x}),
                {}, {static_cast<std::int64_t>(axis0), static_cast<std::int64_t>(axis1)});
}

Tensor scale(const Tensor & x, double factor) { return mul(x, Tensor::scalar(factor)); }
Tensor add_scalar(const Tensor & x, double value) { return add(x, Tensor::scalar(value)); }
Tensor operator+(const Tensor & a, const Tensor & b) { return add(a, b); }
Tensor operator-(const Tensor & a, const Tensor & b) { return sub(a, b); }
Tensor operator*(const Tensor & a, const Tensor & b) { return mul(a, b); }
Tensor operator*(const Tensor & a, double s) { return scale(a, s); }
Tensor operator*(double s, const Tensor & a) { return scale(a, s); }
Tensor operator-(const Tensor & a) { return scale(a, -1.0); }
Tensor abs(const Tensor & x) { return relu(x) + relu(-x); }
Tensor square(const Tensor & x) { return mul(x, x); }

// ----------------------------------------------------------------------------

namespace
{

struct Probe
{
  double analytic;
  double numeric;
};

void fold(GradCheckResult & res, std::size_t index, const Probe & p)
{
  const double err = std::abs(p.analytic - p.numeric) / std::max(1.0, std::abs(p.numeric));
  ++res.coordinates_checked;
  if (err > res.max_rel_error || std::isnan(err)) {
    res.max_rel_error = std::isnan(err) ? std::numeric_limits<double>::infinity() : err;
    res.worst_index = index;
  }
}

void mark_non_finite(GradCheckResult & res, std::size_t index)
{
  res.finite = false;
  res.non_finite_index = index;
  res.max_rel_error = std::numeric_limits<double>::infinity();
  res.message = "non-finite function value at coordinate " + std::to_string(index);
}

}  // namespace

GradCheckResult grad_check(const std::function<Tensor(const Tensor &)> & function,
                           const Tensor & point, double step)
{
  if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");
  GradCheckResult res;
  Tensor x = Tensor::parameter(point.shape(), std::vector<double>(point.values().begin(),
                                                                  point.values().end()));
  Tape tape;
  Tensor y;
  {
    TapeScope scope(tape);
    y = function(x);
  }
  if (!std::isfinite(y.item())) {
    res.finite = false;
    res.max_rel_error = std::numeric_limits<double>::infinity();
    res.message = "non-finite function value at the base point";
    return res;
  }
  tape.backward(y);
  std::vector<double> analytic(x.numel(), 0.0);
  if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), analytic.begin());

  NoTapeScope no_tape;
  std::vector<double> probe(point.values().begin(), point.values().end());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double fp = function(Tensor::constant(point.shape(), probe)).item();
    probe[i] = orig - step;
    const double fm = function(Tensor::constant(point.shape(), probe)).item();
    probe[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      mark_non_finite(res, i);
      return res;
    }
    fold(res, i, {analytic[i], (fp - fm) / (2.0 * step)});
  }
  return res;
}

GradCheckResult grad_check_leaves(const std::function<Tensor()> & loss,
                                  const std::vector<Tensor> & leaves, double step,
                                  const std::vector<std::vector<std::size_t>> & coordinates)
{
  if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");
  GradCheckResult res;
  for (Tensor leaf : leaves) leaf.zero_grad();
  Tape tape;
  Tensor y;
  {
    TapeScope scope(tape);
    y = loss();
  }
  if (!std::isfinite(y.item())) {
    res.finite = false;
    res.max_rel_error = std::numeric_limits<double>::infinity();
    res.message = "non-finite loss at the base point";
    return res;
  }
  tape.backward(y);
  tape.clear();

  NoTapeScope no_tape;
  std::size_t global = 0;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Tensor leaf = leaves[li];
    std::vector<std::size_t> coords;
    if (li < coordinates.size() && !coordinates[li].empty()) {
      coords = coordinates[li];
    } else {
      coords.resize(leaf.numel());
      std::iota(coords.begin(), coords.end(), std::size_t{0});
    }
    auto values = leaf.mutable_values();
    for (std::size_t c : coords) {
      const double analytic = leaf.has_grad() ? leaf.grad()[c] : 0.0;
      const double orig = values[c];
      values[c] = orig + step;
      const double fp = loss().item();
      values[c] = orig - step;
      const double fm = loss().item();
      values[c] = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        mark_non_finite(res, global + c);
        return res;
      }
      fold(res, global + c, {analytic, (fp - fm) / (2.0 * step)});
    }
    global += leaf.numel();
  }
  return res;
}

}  // namespace trajplan::tensor
