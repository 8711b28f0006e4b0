#pragma once

#include <vector>

namespace hdgbc {

/// Piecewise polynomial scalar field: per-element coefficient blocks in the
/// reference orthonormal basis of P^degree.
struct ScalarField {
  int degree = 0;
  int block = 0;  // coefficients per element
  std::vector<double> coeffs;

  const double* elem(int e) const { return coeffs.data() + static_cast<size_t>(e) * block; }
  double* elem(int e) { return coeffs.data() + static_cast<size_t>(e) * block; }
  int n_elements() const { return block ? static_cast<int>(coeffs.size()) / block : 0; }
};

/// Vector field with two stacked scalar components per element: [x-block, y-block].
struct VectorField {
  int degree = 0;
  int block = 0;  // coefficients per component per element
  std::vector<double> coeffs;

  const double* comp(int e, int c) const {
    return coeffs.data() + (static_cast<size_t>(e) * 2 + c) * block;
  }
  double* comp(int e, int c) { return coeffs.data() + (static_cast<size_t>(e) * 2 + c) * block; }
  int n_elements() const { return block ? static_cast<int>(coeffs.size()) / (2 * block) : 0; }
};

/// Polynomial trace field on the boundary skeleton, canonical face orientation.
struct TraceField {
  int degree = 0;
  int block = 0;  // coefficients per boundary face
  std::vector<double> coeffs;

  const double* face(int boundary_ordinal) const {
    return coeffs.data() + static_cast<size_t>(boundary_ordinal) * block;
  }
  double* face(int boundary_ordinal) {
    return coeffs.data() + static_cast<size_t>(boundary_ordinal) * block;
  }
  int n_faces() const { return block ? static_cast<int>(coeffs.size()) / block : 0; }
};

}  // namespace hdgbc
