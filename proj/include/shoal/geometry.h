// Copyright 2026 The Shoal Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS-IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Planar vectors, timestamps and object ids shared by every module.

#ifndef SHOAL_GEOMETRY_H_
#define SHOAL_GEOMETRY_H_

#include <cmath>
#include <cstdint>
#include <limits>

namespace shoal {

using ObjectId = std::uint64_t;

// Microseconds since the epoch of the run.  All timestamps in the engine use
// this resolution; trace files print them as seconds with six decimals.
using Timestamp = std::int64_t;

inline constexpr Timestamp kMicrosPerSecond = 1'000'000;
inline constexpr Timestamp kInfiniteTime = std::numeric_limits<Timestamp>::max();

inline Timestamp FromSeconds(double seconds) {
  return static_cast<Timestamp>(std::llround(seconds * kMicrosPerSecond));
}
constexpr double ToSeconds(Timestamp t) {
  return static_cast<double>(t) / kMicrosPerSecond;
}
// Signed elapsed time from `from` to `to` in seconds.
constexpr double SecondsBetween(Timestamp from, Timestamp to) {
  return static_cast<double>(to - from) / kMicrosPerSecond;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

inline double Norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double Distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Axis-aligned rectangle, closed on both ends.  Cell ownership rules live in
// SpatialGrid; this type is only a coordinate container.
struct Box {
  Vec2 lo;
  Vec2 hi;

  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  bool Contains(Vec2 p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
  }
};

// Euclidean distance from p to the closest point of b; 0 when p is inside.
inline double MinDistance(Vec2 p, const Box& b) {
  double dx = 0.0;
  if (p.x < b.lo.x) dx = b.lo.x - p.x;
  else if (p.x > b.hi.x) dx = p.x - b.hi.x;
  double dy = 0.0;
  if (p.y < b.lo.y) dy = b.lo.y - p.y;
  else if (p.y > b.hi.y) dy = p.y - b.hi.y;
  return std::hypot(dx, dy);
}

}  // namespace shoal

#endif  // SHOAL_GEOMETRY_H_
