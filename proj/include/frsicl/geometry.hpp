#pragma once

#include <cmath>

namespace frsicl {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  bool operator==(const Vec3&) const = default;
};

/// Horizontal (ground-plane) distance between an aerial point and a ground point.
inline double horizontal_distance(const Vec3& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace frsicl
