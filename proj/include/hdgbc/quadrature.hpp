#pragma once

#include <vector>

#include "hdgbc/geometry.hpp"

namespace hdgbc {

/// Quadrature on the reference triangle {x,y >= 0, x+y <= 1}.
struct TriangleRule {
  int exactness = 0;
  std::vector<Vec2> points;
  std::vector<double> weights;
  int size() const { return static_cast<int>(points.size()); }
};

/// Quadrature on the reference segment [0,1].
struct EdgeRule {
  int exactness = 0;
  std::vector<double> points;
  std::vector<double> weights;
  int size() const { return static_cast<int>(points.size()); }
};

inline constexpr int kMaxQuadratureDegree = 40;

/// Rule exact for all bivariate monomials of total degree <= `degree`.
/// All points are interior, all weights positive.
TriangleRule quadrature_triangle(int degree);

/// Gauss-Legendre rule on [0,1] exact to `degree`.
EdgeRule quadrature_edge(int degree);

}  // namespace hdgbc
