#include "hdgbc/basis.hpp"

#include <Eigen/Cholesky>
#include <stdexcept>

#include "hdgbc/errors.hpp"

namespace hdgbc {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Exact monomial moment over the reference triangle.
double tri_moment(int a, int b) { return factorial(a) * factorial(b) / factorial(a + b + 2); }

double mono_pow(double x, int a) {
  double r = 1.0;
  for (int i = 0; i < a; ++i) r *= x;
  return r;
}

}  // namespace

TriBasis::TriBasis(int degree) : degree_(degree) {
  if (degree < 0 || degree > 8) throw UnsupportedDegreeError("TriBasis: degree outside [0,8]");
  size_ = (degree + 1) * (degree + 2) / 2;
  powers_.reserve(size_);
  for (int d = 0; d <= degree; ++d)
    for (int a = d; a >= 0; --a) powers_.push_back({a, d - a});

  Eigen::MatrixXd gram(size_, size_);
  for (int i = 0; i < size_; ++i)
    for (int j = 0; j < size_; ++j)
      gram(i, j) = tri_moment(powers_[i][0] + powers_[j][0], powers_[i][1] + powers_[j][1]);

  // G = L L^T; rows of L^{-1} give an orthonormal hierarchical basis.
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw std::runtime_error("TriBasis: Gram matrix not SPD");
  coeff_ = Eigen::MatrixXd(llt.matrixL())
               .triangularView<Eigen::Lower>()
               .solve(Eigen::MatrixXd::Identity(size_, size_));
}

double TriBasis::value(int i, Vec2 p) const {
  double v = 0.0;
  for (int j = 0; j <= i; ++j)
    v += coeff_(i, j) * mono_pow(p.x, powers_[j][0]) * mono_pow(p.y, powers_[j][1]);
  return v;
}

Vec2 TriBasis::gradient(int i, Vec2 p) const {
  Vec2 g{0.0, 0.0};
  for (int j = 0; j <= i; ++j) {
    const int a = powers_[j][0], b = powers_[j][1];
    if (a > 0) g.x += coeff_(i, j) * a * mono_pow(p.x, a - 1) * mono_pow(p.y, b);
    if (b > 0) g.y += coeff_(i, j) * b * mono_pow(p.x, a) * mono_pow(p.y, b - 1);
  }
  return g;
}

Eigen::MatrixXd TriBasis::values(const std::vector<Vec2>& points) const {
  const int np = static_cast<int>(points.size());
  Eigen::MatrixXd mono(np, size_);
  for (int q = 0; q < np; ++q)
    for (int j = 0; j < size_; ++j)
      mono(q, j) = mono_pow(points[q].x, powers_[j][0]) * mono_pow(points[q].y, powers_[j][1]);
  return mono * coeff_.transpose();
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> TriBasis::gradients(
    const std::vector<Vec2>& points) const {
  const int np = static_cast<int>(points.size());
  Eigen::MatrixXd dx(np, size_), dy(np, size_);
  for (int q = 0; q < np; ++q) {
    for (int j = 0; j < size_; ++j) {
      const int a = powers_[j][0], b = powers_[j][1];
      dx(q, j) = a > 0 ? a * mono_pow(points[q].x, a - 1) * mono_pow(points[q].y, b) : 0.0;
      dy(q, j) = b > 0 ? b * mono_pow(points[q].x, a) * mono_pow(points[q].y, b - 1) : 0.0;
    }
  }
  return {dx * coeff_.transpose(), dy * coeff_.transpose()};
}

EdgeBasis::EdgeBasis(int degree) : degree_(degree) {
  if (degree < 0 || degree > 10) throw UnsupportedDegreeError("EdgeBasis: degree outside [0,10]");
  const int s = degree + 1;
  Eigen::MatrixXd gram(s, s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) gram(i, j) = 1.0 / (i + j + 1);
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw std::runtime_error("EdgeBasis: Gram matrix not SPD");
  coeff_ = Eigen::MatrixXd(llt.matrixL())
               .triangularView<Eigen::Lower>()
               .solve(Eigen::MatrixXd::Identity(s, s));
}

double EdgeBasis::value(int i, double t) const {
  double v = 0.0;
  for (int j = 0; j <= i; ++j) v += coeff_(i, j) * mono_pow(t, j);
  return v;
}

Eigen::MatrixXd EdgeBasis::values(const std::vector<double>& points) const {
  const int np = static_cast<int>(points.size());
  const int s = size();
  Eigen::MatrixXd mono(np, s);
  for (int q = 0; q < np; ++q)
    for (int j = 0; j < s; ++j) mono(q, j) = mono_pow(points[q], j);
  return mono * coeff_.transpose();
}

std::vector<double> project_volume(const std::function<double(Vec2)>& f, const Mesh& mesh,
                                   int elem, int degree, int quadrature_degree) {
  const TriBasis basis(degree);
  const TriangleRule rule =
      quadrature_triangle(quadrature_degree >= 0 ? quadrature_degree : 2 * degree + 6);
  const ElementGeometry geo = mesh.element_geometry(elem);
  const Eigen::MatrixXd vals = basis.values(rule.points);

  // (f, phi_i)_K / (phi_i, phi_i)_K: the |detJ| factors cancel.
  std::vector<double> coeffs(basis.size(), 0.0);
  for (int q = 0; q < rule.size(); ++q) {
    const double fw = f(geo.map(rule.points[q])) * rule.weights[q];
    for (int i = 0; i < basis.size(); ++i) coeffs[i] += fw * vals(q, i);
  }
  return coeffs;
}

std::vector<double> project_trace(const std::function<double(Vec2)>& g, const Mesh& mesh,
                                  int face, int degree, int quadrature_degree) {
  const EdgeBasis basis(degree);
  const EdgeRule rule =
      quadrature_edge(quadrature_degree >= 0 ? quadrature_degree : 2 * degree + 6);
  const Eigen::MatrixXd vals = basis.values(rule.points);

  std::vector<double> coeffs(basis.size(), 0.0);
  for (int q = 0; q < rule.size(); ++q) {
    const double gw = g(mesh.face_point(face, rule.points[q])) * rule.weights[q];
    for (int i = 0; i < basis.size(); ++i) coeffs[i] += gw * vals(q, i);
  }
  return coeffs;
}

double eval_modal(const TriBasis& basis, const std::vector<double>& coeffs, Vec2 ref) {
  double v = 0.0;
  for (int i = 0; i < basis.size(); ++i) v += coeffs[i] * basis.value(i, ref);
  return v;
}

double eval_modal(const EdgeBasis& basis, const std::vector<double>& coeffs, double t) {
  double v = 0.0;
  for (int i = 0; i < basis.size(); ++i) v += coeffs[i] * basis.value(i, t);
  return v;
}

}  // namespace hdgbc
