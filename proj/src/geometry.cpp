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


#include "trajplan/geometry.hpp"

#include <array>
#include <cmath>

namespace trajplan::geometry
{
namespace
{

struct Axes
{
  double ux, uy;  // along heading
  double vx, vy;  // left normal
};

Axes axes_of(const Box & b)
{
  const double c = std::cos(b.heading), s = std::sin(b.heading);
  return {c, s, -s, c};
}

// Half-extent of `b` projected on the unit axis (ax, ay).
double radius_on(const Box & b, const Axes & ab, double ax, double ay)
{
  return 0.5 * b.length * std::abs(ab.ux * ax + ab.uy * ay) +
         0.5 * b.width * std::abs(ab.vx * ax + ab.vy * ay);
}

}  // namespace

bool boxes_intersect(const Box & a, const Box & b)
{
  const Axes aa = axes_of(a), ab = axes_of(b);
  const double dx = b.cx - a.cx, dy = b.cy - a.cy;
  const std::array<std::array<double, 2>, 4> axes = {{
    {aa.ux, aa.uy}, {aa.vx, aa.vy}, {ab.ux, ab.uy}, {ab.vx, ab.vy}}};
  for (const auto & ax : axes) {
    const double dist = std::abs(dx * ax[0] + dy * ax[1]);
    if (dist > radius_on(a, aa, ax[0], ax[1]) + radius_on(b, ab, ax[0], ax[1])) return false;
  }
  return true;
}

bool box_contains(const Box & b, double x, double y)
{
  const Axes ab = axes_of(b);
  const double dx = x - b.cx, dy = y - b.cy;
  return std::abs(dx * ab.ux + dy * ab.uy) <= 0.5 * b.length &&
         std::abs(dx * ab.vx + dy * ab.vy) <= 0.5 * b.width;
}

}  // namespace trajplan::geometry
