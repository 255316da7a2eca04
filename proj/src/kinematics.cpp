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


#include "trajplan/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace trajplan::kinematics
{

namespace t = tensor;

double wrap_angle(double angle)
{
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

std::vector<Point2> integrate(const Pose & pose0, const ControlSequence & controls, double dt)
{
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
  std::vector<Point2> out;
  out.reserve(controls.size());
  double x = pose0.x, y = pose0.y, th = pose0.heading;
  for (const Control & c : controls) {
    th += c.yaw_rate * dt;
    x += c.speed * std::cos(th) * dt;
    y += c.speed * std::sin(th) * dt;
    out.push_back({x, y});
  }
  return out;
}

ControlSequence controls_from_positions(const std::vector<Point2> & positions, const Pose & pose0,
                                        double dt)
{
  if (!(dt > 0.0)) throw std::invalid_argument("controls_from_positions: dt must be positive");
  constexpr double min_step = 1e-9;
  ControlSequence out;
  out.reserve(positions.size());
  double px = pose0.x, py = pose0.y, prev_heading = pose0.heading;
  for (const Point2 & p : positions) {
    const double dx = p.x - px, dy = p.y - py;
    const double dist = std::hypot(dx, dy);
    double heading = prev_heading;
    if (dist > min_step) heading = std::atan2(dy, dx);
    out.push_back({dist / dt, wrap_angle(heading - prev_heading) / dt});
    prev_heading = heading;
    px = p.x;
    py = p.y;
  }
  return out;
}

ControlSequence clamp_controls(const ControlSequence & controls, const ControlBounds & bounds)
{
  ControlSequence out = controls;
  for (Control & c : out) {
    c.speed = std::clamp(c.speed, bounds.speed_min, bounds.speed_max);
    c.yaw_rate = std::clamp(c.yaw_rate, bounds.yaw_rate_min, bounds.yaw_rate_max);
  }
  return out;
}

Rollout integrate(const Pose & pose0, const t::Tensor & speed, const t::Tensor & yaw_rate,
                  double dt)
{
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
  if (speed.rank() != 2 || speed.shape() != yaw_rate.shape()) {
    throw t::ShapeError("integrate: speed " + t::to_string(speed.shape()) + " and yaw_rate " +
                        t::to_string(yaw_rate.shape()) + " must both be [M, T]");
  }
  const std::size_t steps = speed.dim(1);
  // upper[s, t] = 1 for s <= t turns a row-vector product into a prefix sum.
  std::vector<double> upper(steps * steps, 0.0);
  for (std::size_t s = 0; s < steps; ++s)
    for (std::size_t c = s; c < steps; ++c) upper[s * steps + c] = 1.0;
  const t::Tensor prefix = t::Tensor::constant({steps, steps}, std::move(upper));

  const t::Tensor heading =
    t::add_scalar(t::matmul(t::scale(yaw_rate, dt), prefix), pose0.heading);
  const t::Tensor step = t::scale(speed, dt);
  Rollout r;
  r.x = t::add_scalar(t::matmul(t::mul(step, t::cos(heading)), prefix), pose0.x);
  r.y = t::add_scalar(t::matmul(t::mul(step, t::sin(heading)), prefix), pose0.y);
  return r;
}

Point2 rotate(const Point2 & p, double angle)
{
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

std::vector<Point2> transform_track(const std::vector<Point2> & track, double dx, double dy,
                                    double angle)
{
  std::vector<Point2> out;
  out.reserve(track.size());
  for (const Point2 & p : track) {
    const Point2 r = rotate(p, angle);
    out.push_back({r.x + dx, r.y + dy});
  }
  return out;
}

}  // namespace trajplan::kinematics
