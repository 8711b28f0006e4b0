#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "hdgbc/geometry.hpp"
#include "hdgbc/mesh.hpp"
#include "hdgbc/quadrature.hpp"

namespace hdgbc {

/// L2-orthonormal modal basis of P^degree on the reference triangle.
/// Built by Cholesky orthonormalization of the monomial basis against the
/// exact monomial Gram matrix (closed form i!j!/(i+j+2)!).
class TriBasis {
public:
  explicit TriBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return size_; }

  double value(int i, Vec2 p) const;
  Vec2 gradient(int i, Vec2 p) const;

  /// Rows = points, columns = basis functions.
  Eigen::MatrixXd values(const std::vector<Vec2>& points) const;
  /// Reference-coordinate gradients, one matrix per component.
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> gradients(const std::vector<Vec2>& points) const;

private:
  int degree_;
  int size_;
  std::vector<std::array<int, 2>> powers_;
  Eigen::MatrixXd coeff_;  // basis_i = sum_j coeff_(i,j) * monomial_j
};

/// L2-orthonormal modal basis of P^degree on the reference segment [0,1].
class EdgeBasis {
public:
  explicit EdgeBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return degree_ + 1; }

  double value(int i, double t) const;
  Eigen::MatrixXd values(const std::vector<double>& points) const;

private:
  int degree_;
  Eigen::MatrixXd coeff_;
};

/// Coefficients of the L2(K)-orthogonal projection of f onto P^degree(K),
/// in the reference orthonormal basis. Diagonal solve thanks to orthonormality.
std::vector<double> project_volume(const std::function<double(Vec2)>& f, const Mesh& mesh,
                                   int elem, int degree, int quadrature_degree = -1);

/// Coefficients of the L2(e)-orthogonal projection of g onto P^degree(e) in the
/// canonical face parameterization; g takes physical points on the face.
std::vector<double> project_trace(const std::function<double(Vec2)>& g, const Mesh& mesh,
                                  int face, int degree, int quadrature_degree = -1);

/// Evaluate a coefficient vector in the element basis at a reference point.
double eval_modal(const TriBasis& basis, const std::vector<double>& coeffs, Vec2 ref);
double eval_modal(const EdgeBasis& basis, const std::vector<double>& coeffs, double t);

}  // namespace hdgbc
