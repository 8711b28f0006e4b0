#include "hdgbc/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

namespace hdgbc {

double Mesh::h_max() const {
  double h = 0.0;
  for (double d : diameters) h = std::max(h, d);
  return h;
}

double Mesh::h_min() const {
  double h = diameters.empty() ? 0.0 : diameters.front();
  for (double d : diameters) h = std::min(h, d);
  return h;
}

double Mesh::area(int elem) const {
  const auto& t = triangles[elem];
  const Vec2 a = vertices[t[0]], b = vertices[t[1]], c = vertices[t[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

Vec2 Mesh::centroid(int elem) const {
  const auto& t = triangles[elem];
  const Vec2 a = vertices[t[0]], b = vertices[t[1]], c = vertices[t[2]];
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

ElementGeometry Mesh::element_geometry(int elem) const {
  const auto& t = triangles[elem];
  const Vec2 a = vertices[t[0]], b = vertices[t[1]], c = vertices[t[2]];
  ElementGeometry g;
  g.v0 = a;
  g.J[0][0] = b.x - a.x;
  g.J[1][0] = b.y - a.y;
  g.J[0][1] = c.x - a.x;
  g.J[1][1] = c.y - a.y;
  g.detJ = g.J[0][0] * g.J[1][1] - g.J[0][1] * g.J[1][0];
  const double inv = 1.0 / g.detJ;
  g.invJ[0][0] = g.J[1][1] * inv;
  g.invJ[0][1] = -g.J[0][1] * inv;
  g.invJ[1][0] = -g.J[1][0] * inv;
  g.invJ[1][1] = g.J[0][0] * inv;
  return g;
}

Vec2 Mesh::face_point(int face, double t) const {
  const Face& f = faces[face];
  const Vec2 a = vertices[f.v[0]], b = vertices[f.v[1]];
  return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
}

Mesh build_structured(double side_length, int subdivisions) {
  if (subdivisions < 1) throw std::invalid_argument("build_structured: subdivisions must be >= 1");
  if (!(side_length > 0.0)) throw std::invalid_argument("build_structured: side length must be positive");

  const int n = subdivisions;
  const double cell = side_length / n;

  Mesh m;
  m.side_length = side_length;
  m.subdivisions = n;

  m.vertices.reserve((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) m.vertices.push_back({i * cell, j * cell});

  auto vid = [n](int i, int j) { return j * (n + 1) + i; };

  m.triangles.reserve(2 * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j);
      const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      m.triangles.push_back({v00, v10, v11});  // below the LL-UR diagonal
      m.triangles.push_back({v00, v11, v01});  // above
    }
  }

  // Faces in first-seen order over the element loop; canonical orientation
  // from the lower to the higher vertex id.
  std::map<std::pair<int, int>, int> face_id;
  m.element_faces.assign(m.triangles.size(), {-1, -1, -1});
  for (int e = 0; e < m.n_elements(); ++e) {
    const auto& t = m.triangles[e];
    for (int le = 0; le < 3; ++le) {
      const int a = t[le], b = t[(le + 1) % 3];
      const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
      auto it = face_id.find(key);
      if (it == face_id.end()) {
        Face f;
        f.v = {key.first, key.second};
        f.elems[0] = e;
        f.length = (m.vertices[key.second] - m.vertices[key.first]).norm();
        it = face_id.emplace(key, m.n_faces()).first;
        m.faces.push_back(f);
      } else {
        m.faces[it->second].elems[1] = e;
      }
      m.element_faces[e][le] = it->second;
    }
  }

  m.face_interior_ordinal.assign(m.n_faces(), -1);
  m.face_boundary_ordinal.assign(m.n_faces(), -1);
  for (int f = 0; f < m.n_faces(); ++f) {
    if (m.faces[f].elems[1] < 0) {
      m.faces[f].boundary = true;
      m.face_boundary_ordinal[f] = static_cast<int>(m.boundary_faces.size());
      m.boundary_faces.push_back(f);
    } else {
      m.face_interior_ordinal[f] = static_cast<int>(m.interior_faces.size());
      m.interior_faces.push_back(f);
    }
  }

  m.diameters.assign(m.n_elements(), std::sqrt(2.0) * cell);
  return m;
}

FaceGeometry face_geometry(const Mesh& mesh, int face, int elem) {
  const Face& f = mesh.faces[face];
  if (f.elems[0] != elem && f.elems[1] != elem)
    throw std::invalid_argument("face_geometry: face not adjacent to element");
  const Vec2 a = mesh.vertices[f.v[0]], b = mesh.vertices[f.v[1]];
  const Vec2 tangent = b - a;
  const double len = tangent.norm();
  Vec2 normal{tangent.y / len, -tangent.x / len};
  const Vec2 mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
  const Vec2 toward = mid - mesh.centroid(elem);
  if (normal.dot(toward) < 0.0) normal = {-normal.x, -normal.y};
  return {normal, len};
}

namespace {

// Side/position classification of a boundary face of a structured mesh.
// side: 0 bottom, 1 right, 2 top, 3 left; index: cell index along the side.
std::pair<int, int> classify_boundary_face(const Mesh& m, int face) {
  const Face& f = m.faces[face];
  const Vec2 a = m.vertices[f.v[0]], b = m.vertices[f.v[1]];
  const Vec2 mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
  const double L = m.side_length;
  const double cell = L / m.subdivisions;
  const double eps = 0.25 * cell;
  if (std::abs(mid.y) < eps) return {0, static_cast<int>(mid.x / cell)};
  if (std::abs(mid.x - L) < eps) return {1, static_cast<int>(mid.y / cell)};
  if (std::abs(mid.y - L) < eps) return {2, static_cast<int>(mid.x / cell)};
  return {3, static_cast<int>(mid.y / cell)};
}

}  // namespace

RefinedMesh refine(const Mesh& coarse) {
  RefinedMesh out;
  out.mesh = build_structured(coarse.side_length, 2 * coarse.subdivisions);
  const Mesh& fine = out.mesh;

  const int nc = coarse.subdivisions;
  const double cc = coarse.side_length / nc;

  out.parent_element.resize(fine.n_elements());
  for (int e = 0; e < fine.n_elements(); ++e) {
    const Vec2 c = fine.centroid(e);
    int ci = std::min(static_cast<int>(c.x / cc), nc - 1);
    int cj = std::min(static_cast<int>(c.y / cc), nc - 1);
    const bool lower = (c.y - cj * cc) < (c.x - ci * cc);
    out.parent_element[e] = 2 * (cj * nc + ci) + (lower ? 0 : 1);
  }

  // Coarse boundary lookup (side, cell index) -> boundary ordinal.
  std::vector<int> lookup(4 * nc, -1);
  for (int bo = 0; bo < coarse.n_boundary_faces(); ++bo) {
    const auto [side, idx] = classify_boundary_face(coarse, coarse.boundary_faces[bo]);
    lookup[side * nc + idx] = bo;
  }
  out.parent_boundary_face.resize(fine.n_boundary_faces());
  for (int bo = 0; bo < fine.n_boundary_faces(); ++bo) {
    const auto [side, idx] = classify_boundary_face(fine, fine.boundary_faces[bo]);
    out.parent_boundary_face[bo] = lookup[side * nc + idx / 2];
  }
  return out;
}

int MeshHierarchy::level_of(int subdivisions) const {
  for (int j = 0; j < n_levels(); ++j)
    if (levels[j].subdivisions == subdivisions) return j;
  return -1;
}

int MeshHierarchy::ancestor_element(int fine_level, int coarse_level, int elem) const {
  int e = elem;
  for (int j = fine_level; j > coarse_level; --j) e = parent_element[j - 1][e];
  return e;
}

int MeshHierarchy::ancestor_boundary_face(int fine_level, int coarse_level,
                                          int boundary_ordinal) const {
  int b = boundary_ordinal;
  for (int j = fine_level; j > coarse_level; --j) b = parent_boundary_face[j - 1][b];
  return b;
}

MeshHierarchy build_hierarchy(double side_length, int coarsest_n, int n_levels) {
  if (n_levels < 1) throw std::invalid_argument("build_hierarchy: need at least one level");
  MeshHierarchy h;
  h.levels.push_back(build_structured(side_length, coarsest_n));
  for (int j = 1; j < n_levels; ++j) {
    RefinedMesh r = refine(h.levels.back());
    h.levels.push_back(std::move(r.mesh));
    h.parent_element.push_back(std::move(r.parent_element));
    h.parent_boundary_face.push_back(std::move(r.parent_boundary_face));
  }
  return h;
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  out.precision(17);
  out << "VERTICES " << mesh.n_vertices() << "\n";
  for (int i = 0; i < mesh.n_vertices(); ++i)
    out << i << " " << mesh.vertices[i].x << " " << mesh.vertices[i].y << "\n";
  out << "TRIANGLES " << mesh.n_elements() << "\n";
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& t = mesh.triangles[e];
    out << e << " " << t[0] << " " << t[1] << " " << t[2] << "\n";
  }
  out << "FACES " << mesh.n_faces() << "\n";
  for (int f = 0; f < mesh.n_faces(); ++f) {
    const Face& fc = mesh.faces[f];
    out << f << " " << fc.v[0] << " " << fc.v[1] << " " << (fc.boundary ? 1 : 0) << "\n";
  }
}

}  // namespace hdgbc
