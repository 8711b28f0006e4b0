#pragma once

#include <cmath>

namespace hdgbc {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::sqrt(x * x + y * y); }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

/// Affine map x = v0 + J*xhat from the reference triangle {x,y >= 0, x+y <= 1}.
struct ElementGeometry {
  Vec2 v0;
  double J[2][2];     // columns are the edge vectors v1-v0, v2-v0
  double invJ[2][2];
  double detJ;        // = 2 * area, positive for CCW elements

  Vec2 map(Vec2 ref) const {
    return {v0.x + J[0][0] * ref.x + J[0][1] * ref.y, v0.y + J[1][0] * ref.x + J[1][1] * ref.y};
  }
  Vec2 unmap(Vec2 phys) const {
    const Vec2 d = phys - v0;
    return {invJ[0][0] * d.x + invJ[0][1] * d.y, invJ[1][0] * d.x + invJ[1][1] * d.y};
  }
  /// Push a reference gradient to physical coordinates: grad_x = J^{-T} grad_ref.
  Vec2 push_gradient(Vec2 gref) const {
    return {invJ[0][0] * gref.x + invJ[1][0] * gref.y, invJ[0][1] * gref.x + invJ[1][1] * gref.y};
  }
};

}  // namespace hdgbc
