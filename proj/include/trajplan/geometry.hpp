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

namespace trajplan::geometry
{

struct Box
{
  double cx = 0.0;
  double cy = 0.0;
  double heading = 0.0;
  double length = 0.0;  // along heading
  double width = 0.0;
};

// Separating-axis test for oriented rectangles; touching counts as
// intersecting.
bool boxes_intersect(const Box & a, const Box & b);

bool box_contains(const Box & b, double x, double y);

}  // namespace trajplan::geometry
