#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "hdgbc/geometry.hpp"

namespace hdgbc {

struct Face {
  std::array<int, 2> v{-1, -1};      // endpoint vertex ids, v[0] < v[1] (canonical orientation)
  std::array<int, 2> elems{-1, -1};  // adjacent elements; elems[1] = -1 on the boundary
  bool boundary = false;
  double length = 0.0;

  int n_adjacent() const { return elems[1] < 0 ? 1 : 2; }
};

/// Conforming triangulation of the square [0,L]^2, n x n cells each split along
/// the lower-left to upper-right diagonal. Immutable after construction.
class Mesh {
public:
  double side_length = 0.0;
  int subdivisions = 0;

  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;        // CCW vertex ids
  std::vector<Face> faces;
  std::vector<std::array<int, 3>> element_faces;    // local edge i = (v_i, v_{i+1 mod 3})
  std::vector<double> diameters;                    // h_K per element
  std::vector<int> interior_faces;                  // face ids
  std::vector<int> boundary_faces;
  std::vector<int> face_interior_ordinal;           // -1 if boundary
  std::vector<int> face_boundary_ordinal;           // -1 if interior

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_elements() const { return static_cast<int>(triangles.size()); }
  int n_faces() const { return static_cast<int>(faces.size()); }
  int n_interior_faces() const { return static_cast<int>(interior_faces.size()); }
  int n_boundary_faces() const { return static_cast<int>(boundary_faces.size()); }

  double h_max() const;
  double h_min() const;
  double area(int elem) const;
  Vec2 centroid(int elem) const;
  ElementGeometry element_geometry(int elem) const;

  /// Endpoints of a face in canonical orientation (lower vertex id first).
  Vec2 face_point(int face, double t) const;
};

struct FaceGeometry {
  Vec2 normal;    // unit, outward from the queried element
  double length;
};

Mesh build_structured(double side_length, int subdivisions);

/// Unit outward normal (from `elem`) and length of `face`.
/// Throws std::invalid_argument if the face is not adjacent to the element.
FaceGeometry face_geometry(const Mesh& mesh, int face, int elem);

struct RefinedMesh {
  Mesh mesh;
  std::vector<int> parent_element;        // fine element -> coarse element
  std::vector<int> parent_boundary_face;  // fine boundary ordinal -> coarse boundary ordinal
};

RefinedMesh refine(const Mesh& mesh);

/// Nested meshes produced by repeated uniform refinement; level j has n0 * 2^j subdivisions.
class MeshHierarchy {
public:
  std::vector<Mesh> levels;
  std::vector<std::vector<int>> parent_element;        // [j]: level j+1 elems -> level j
  std::vector<std::vector<int>> parent_boundary_face;  // [j]: level j+1 boundary ordinals -> level j

  int n_levels() const { return static_cast<int>(levels.size()); }
  int level_of(int subdivisions) const;  // -1 if absent

  /// Ancestor element of a fine element at a coarser level.
  int ancestor_element(int fine_level, int coarse_level, int elem) const;
  int ancestor_boundary_face(int fine_level, int coarse_level, int boundary_ordinal) const;
};

MeshHierarchy build_hierarchy(double side_length, int coarsest_n, int n_levels);

/// Plain-text dump with VERTICES / TRIANGLES / FACES sections.
void write_mesh(std::ostream& out, const Mesh& mesh);

}  // namespace hdgbc
