#include "hdgbc/quadrature.hpp"

#include <cmath>

#include "hdgbc/errors.hpp"

namespace hdgbc {

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_m.
void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(m);
  weights.resize(m);
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= m; ++j) {
        const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

void gauss_legendre_unit(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  gauss_legendre(m, nodes, weights);
  for (int i = 0; i < m; ++i) {
    nodes[i] = 0.5 * (nodes[i] + 1.0);
    weights[i] *= 0.5;
  }
}

}  // namespace

TriangleRule quadrature_triangle(int degree) {
  if (degree < 0 || degree > kMaxQuadratureDegree)
    throw UnsupportedDegreeError("quadrature_triangle: degree " + std::to_string(degree) +
                                 " outside [0, " + std::to_string(kMaxQuadratureDegree) + "]");
  // Collapsed tensor product on the unit square: x = u(1-v), y = v with
  // Jacobian (1-v); the v direction carries one extra polynomial degree.
  const int m = (degree + 2 + 1) / 2;
  std::vector<double> gn, gw;
  gauss_legendre_unit(m, gn, gw);

  TriangleRule rule;
  rule.exactness = degree;
  rule.points.reserve(m * m);
  rule.weights.reserve(m * m);
  for (int j = 0; j < m; ++j) {
    const double v = gn[j];
    for (int i = 0; i < m; ++i) {
      const double u = gn[i];
      rule.points.push_back({u * (1.0 - v), v});
      rule.weights.push_back(gw[i] * gw[j] * (1.0 - v));
    }
  }
  return rule;
}

EdgeRule quadrature_edge(int degree) {
  if (degree < 0 || degree > kMaxQuadratureDegree)
    throw UnsupportedDegreeError("quadrature_edge: degree " + std::to_string(degree) +
                                 " outside [0, " + std::to_string(kMaxQuadratureDegree) + "]");
  const int m = (degree + 1 + 1) / 2;
  EdgeRule rule;
  rule.exactness = degree;
  gauss_legendre_unit(std::max(m, 1), rule.points, rule.weights);
  return rule;
}

}  // namespace hdgbc
