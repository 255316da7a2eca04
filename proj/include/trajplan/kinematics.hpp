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

// Unicycle model: x' = v cos(theta), y' = v sin(theta), theta' = omega,
// integrated with explicit Euler. Step t first advances the heading, then
// moves along the new heading.

#include <cstddef>
#include <vector>

#include "trajplan/tensor.hpp"

namespace trajplan::kinematics
{

struct Point2
{
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2 &, const Point2 &) = default;
};

struct Pose
{
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // (-pi, pi]
  double speed = 0.0;
};

struct Control
{
  double speed = 0.0;     // m/s
  double yaw_rate = 0.0;  // rad/s
};

using ControlSequence = std::vector<Control>;

struct ControlBounds
{
  double speed_min = 0.0;
  double speed_max = 30.0;
  double yaw_rate_min = -1.0;
  double yaw_rate_max = 1.0;
};

// Maps an angle to (-pi, pi].
double wrap_angle(double angle);

std::vector<Point2> integrate(const Pose & pose0, const ControlSequence & controls, double dt);

// Inverse of integrate(). Steps with (near) zero displacement keep the
// previous heading, so their yaw rate comes out as 0.
ControlSequence controls_from_positions(const std::vector<Point2> & positions, const Pose & pose0,
                                        double dt);

ControlSequence clamp_controls(const ControlSequence & controls, const ControlBounds & bounds);

// Differentiable rollout of many sequences at once. speed and yaw_rate are
// [M, T]; the result holds x and y as [M, T] tensors.
struct Rollout
{
  tensor::Tensor x;
  tensor::Tensor y;
};
Rollout integrate(const Pose & pose0, const tensor::Tensor & speed,
                  const tensor::Tensor & yaw_rate, double dt);

// Rigid 2D transform helpers.
Point2 rotate(const Point2 & p, double angle);
std::vector<Point2> transform_track(const std::vector<Point2> & track, double dx, double dy,
                                    double angle);

}  // namespace trajplan::kinematics
