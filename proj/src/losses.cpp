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


#include "trajplan/losses.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace trajplan::losses
{

namespace t = tensor;

void validate(const LossWeights & w)
{
  for (double v : {w.gmm, w.cls, w.dense, w.collision, w.dynamics}) {
    if (!(v >= 0.0)) throw std::invalid_argument("loss weights must be nonnegative");
  }
  if (w.warmup_epoch < 0) throw std::invalid_argument("warmup_epoch must be nonnegative");
}

std::size_t TrackTarget::valid_count() const
{
  std::size_t n = 0;
  for (double v : valid) n += v != 0.0 ? 1 : 0;
  return n;
}

Point2 TrackTarget::endpoint() const
{
  for (std::size_t i = valid.size(); i-- > 0;) {
    if (valid[i] != 0.0) return {x[i], y[i]};
  }
  throw std::invalid_argument("track has no valid step");
}

std::size_t hard_assign(const std::vector<Point2> & anchors, Point2 gt)
{
  if (anchors.empty()) throw std::invalid_argument("hard_assign: no anchors");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    const double d = std::hypot(anchors[k].x - gt.x, anchors[k].y - gt.y);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

double gaussian_nll(double dx, double dy, double lsx, double lsy, double rho)
{
  const double zx = dx * std::exp(-lsx), zy = dy * std::exp(-lsy);
  const double one = 1.0 - rho * rho;
  return std::log(2.0 * std::numbers::pi) + lsx + lsy + 0.5 * std::log(one) +
         (zx * zx + zy * zy - 2.0 * rho * zx * zy) / (2.0 * one);
}

namespace
{

Tensor row(const Tensor & x, std::size_t r)
{
  return t::slice(x, 0, r, r + 1);
}

void check_bounds(const decoder::LayerPrediction & p, std::size_t mode)
{
  const std::size_t tf = p.mu_x.dim(1);
  for (std::size_t i = mode * tf; i < (mode + 1) * tf; ++i) {
    const double sx = p.log_sigma_x[i], sy = p.log_sigma_y[i], r = p.rho[i];
    // NaN passes here and surfaces as NonFiniteLoss.
    const double lo = std::log(0.01) - 1e-12, hi = std::log(10.0) + 1e-12;
    if (sx < lo || sx > hi || sy < lo || sy > hi || std::abs(r) >= 1.0) {
      throw std::logic_error("gmm_nll: Gaussian parameters out of bounds");
    }
  }
}

}  // namespace

Tensor gmm_nll(const decoder::LayerPrediction & p, std::size_t mode, const TrackTarget & gt)
{
  const std::size_t tf = p.mu_x.dim(1);
  if (gt.x.size() != tf || gt.y.size() != tf || gt.valid.size() != tf) {
    throw t::ShapeError("gmm_nll: target length does not match the horizon");
  }
  const std::size_t n = gt.valid_count();
  if (n == 0) throw std::invalid_argument("gmm_nll: target has no valid step");
  check_bounds(p, mode);
  const Tensor gx = Tensor::constant({1, tf}, gt.x);
  const Tensor gy = Tensor::constant({1, tf}, gt.y);
  const Tensor mask = Tensor::constant({1, tf}, gt.valid);
  const Tensor lsx = row(p.log_sigma_x, mode), lsy = row(p.log_sigma_y, mode);
  const Tensor rho = row(p.rho, mode);
  const Tensor zx = t::mul(t::sub(gx, row(p.mu_x, mode)), t::exp(-lsx));
  const Tensor zy = t::mul(t::sub(gy, row(p.mu_y, mode)), t::exp(-lsy));
  const Tensor one = t::add_scalar(-t::square(rho), 1.0);
  const Tensor quad = t::mul(t::square(zx) + t::square(zy) - 2.0 * t::mul(rho, t::mul(zx, zy)),
                             t::exp(-t::log(2.0 * one)));
  const Tensor nll = t::add_scalar(lsx + lsy + 0.5 * t::log(one) + quad,
                                   std::log(2.0 * std::numbers::pi));
  return t::scale(t::sum(t::mul(nll, mask)), 1.0 / static_cast<double>(n));
}

Tensor cls_loss(const Tensor & scores, std::size_t mode)
{
  return -t::log(t::reshape(t::slice(scores, 1, mode, mode + 1), {}));
}

Tensor dense_loss(const Tensor & pred, const std::vector<TrackTarget> & targets)
{
  const std::size_t n = pred.dim(0), tf = pred.dim(1);
  if (targets.size() != n) throw t::ShapeError("dense_loss: one target per agent token needed");
  std::vector<double> g(n * tf * 2, 0.0), m(n * tf * 2, 0.0);
  std::size_t count = 0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t s = 0; s < tf; ++s) {
      if (targets[a].valid[s] == 0.0) continue;
      ++count;
      g[(a * tf + s) * 2] = targets[a].x[s];
      g[(a * tf + s) * 2 + 1] = targets[a].y[s];
      m[(a * tf + s) * 2] = m[(a * tf + s) * 2 + 1] = 1.0;
    }
  }
  if (count == 0) return Tensor::scalar(0.0);
  const Tensor diff = t::abs(t::sub(pred, Tensor::constant({n, tf, 2}, std::move(g))));
  return t::scale(t::sum(t::mul(diff, Tensor::constant({n, tf, 2}, std::move(m)))),
                  1.0 / static_cast<double>(count));
}

double overlap_penalty(double dx, double dy, double mx, double my, double beta)
{
  const auto sp = [](double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); };
  return sp(beta * (mx - std::abs(dx))) * sp(beta * (my - std::abs(dy))) / (beta * beta);
}

Tensor collision_loss(const Tensor & mu_x, const Tensor & mu_y, double half_length,
                      double half_width, const std::vector<Obstacle> & obstacles,
                      const CollisionParams & params)
{
  const std::size_t k = mu_x.dim(0), tf = mu_x.dim(1);
  Tensor total = Tensor::scalar(0.0);
  const double beta = params.beta;
  for (const Obstacle & o : obstacles) {
    std::vector<double> w(tf), c(tf), s(tf);
    bool any = false;
    for (std::size_t i = 0; i < tf; ++i) {
      w[i] = o.valid[i] != 0.0 ? std::exp(-static_cast<double>(i) * params.dt / params.tau) : 0.0;
      any |= w[i] != 0.0;
      c[i] = std::cos(o.heading[i]);
      s[i] = std::sin(o.heading[i]);
    }
    if (!any) continue;
    const Tensor cr = Tensor::constant({1, tf}, c), sr = Tensor::constant({1, tf}, s);
    const Tensor rx = t::sub(mu_x, Tensor::constant({1, tf}, o.x));
    const Tensor ry = t::sub(mu_y, Tensor::constant({1, tf}, o.y));
    const Tensor dx = t::add(t::mul(rx, cr), t::mul(ry, sr));
    const Tensor dy = t::sub(t::mul(ry, cr), t::mul(rx, sr));
    const double mx = half_length + o.half_length, my = half_width + o.half_width;
    const Tensor px = t::softplus(t::add_scalar(t::scale(t::abs(dx), -beta), beta * mx));
    const Tensor py = t::softplus(t::add_scalar(t::scale(t::abs(dy), -beta), beta * my));
    const Tensor term = t::mul(t::mul(px, py), Tensor::constant({1, tf}, w));
    total = t::add(total, t::sum(term));
  }
  return t::scale(total, 1.0 / (beta * beta * static_cast<double>(k)));
}

Tensor dynamics_loss(const decoder::LayerPrediction & p, const kinematics::Pose & pose0,
                     const std::vector<double> & valid, double dt)
{
  const std::size_t k = p.mu_x.dim(0), tf = p.mu_x.dim(1);
  if (valid.size() != tf) throw t::ShapeError("dynamics_loss: mask length does not match horizon");
  std::size_t n = 0;
  for (double v : valid) n += v != 0.0 ? 1 : 0;
  if (n == 0) return Tensor::scalar(0.0);
  const auto sim = kinematics::integrate(pose0, p.speed, p.yaw_rate, dt);
  const Tensor d2 = t::square(t::sub(sim.x, p.mu_x)) + t::square(t::sub(sim.y, p.mu_y));
  return t::scale(t::sum(t::mul(d2, Tensor::constant({1, tf}, valid))),
                  1.0 / static_cast<double>(k * n));
}

TotalLoss total_loss(const LossTerms & terms, const LossWeights & weights, int epoch)
{
  TotalLoss out;
  LossReport & r = out.report;
  const bool late = epoch >= weights.warmup_epoch;
  Tensor total = Tensor::scalar(0.0);
  const auto take = [&](const char * name, const Tensor & term, double weight, double & slot,
                        bool active) {
    if (!term.defined()) return;
    slot = term.item();
    if (!std::isfinite(slot)) throw NonFiniteLoss(name);
    if (active) total = t::add(total, t::scale(term, weight));
  };
  take("gmm", terms.gmm, weights.gmm, r.gmm, true);
  take("cls", terms.cls, weights.cls, r.cls, true);
  take("dense", terms.dense, weights.dense, r.dense, true);
  r.collision_active = late && terms.collision.defined();
  r.dynamics_active = late && terms.dynamics.defined();
  take("collision", terms.collision, weights.collision, r.collision, r.collision_active);
  take("dynamics", terms.dynamics, weights.dynamics, r.dynamics, r.dynamics_active);
  out.total = total;
  r.total = total.item();
  return out;
}

double recombine(const LossReport & r, const LossWeights & w)
{
  double total = 0.0;
  total += w.gmm * r.gmm;
  total += w.cls * r.cls;
  total += w.dense * r.dense;
  if (r.collision_active) total += w.collision * r.collision;
  if (r.dynamics_active) total += w.dynamics * r.dynamics;
  return total;
}

}  // namespace trajplan::losses
