#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "hdgbc/mesh.hpp"

using namespace hdgbc;

TEST_CASE("structured mesh combinatorics") {
  SUBCASE("n=1") {
    const Mesh m = build_structured(0.125, 1);
    CHECK(m.n_vertices() == 4);
    CHECK(m.n_elements() == 2);
    CHECK(m.n_faces() == 5);
    CHECK(m.n_boundary_faces() == 4);
    CHECK(m.n_interior_faces() == 1);
  }
  SUBCASE("n=2") {
    const Mesh m = build_structured(0.125, 2);
    CHECK(m.n_vertices() == 9);
    CHECK(m.n_elements() == 8);
    CHECK(m.n_faces() == 16);
    CHECK(m.n_boundary_faces() == 8);
    CHECK(m.n_interior_faces() == 8);
  }
  SUBCASE("count formulas and Euler relation") {
    for (int n : {1, 2, 3, 4, 8}) {
      const Mesh m = build_structured(1.0, n);
      CHECK(m.n_vertices() == (n + 1) * (n + 1));
      CHECK(m.n_elements() == 2 * n * n);
      CHECK(m.n_faces() == 3 * n * n + 2 * n);
      CHECK(m.n_boundary_faces() == 4 * n);
      CHECK(m.n_vertices() - m.n_faces() + m.n_elements() == 1);
    }
  }
}

TEST_CASE("element diameters match the h/sqrt(2) = 2^-7 level") {
  const Mesh m = build_structured(0.125, 16);
  for (double d : m.diameters) CHECK(d == doctest::Approx(std::sqrt(2.0) / 128.0).epsilon(1e-14));
  CHECK(m.h_max() / m.h_min() == doctest::Approx(1.0));  // quasi-uniformity, exactly 1
  CHECK(m.h_max() / std::sqrt(2.0) == doctest::Approx(std::pow(2.0, -7)).epsilon(1e-14));
}

TEST_CASE("mesh geometry invariants") {
  const Mesh m = build_structured(0.125, 4);
  double area = 0.0;
  for (int e = 0; e < m.n_elements(); ++e) {
    CHECK(m.area(e) > 0.0);
    area += m.area(e);
  }
  CHECK(area == doctest::Approx(0.125 * 0.125).epsilon(1e-14));

  // every interior face has two adjacent elements, every boundary face one
  for (const Face& f : m.faces) {
    if (f.boundary)
      CHECK(f.n_adjacent() == 1);
    else
      CHECK(f.n_adjacent() == 2);
    CHECK(f.v[0] < f.v[1]);  // canonical orientation
  }
  CHECK(m.n_interior_faces() + m.n_boundary_faces() == m.n_faces());
}

TEST_CASE("invalid build arguments") {
  CHECK_THROWS_AS(build_structured(0.125, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_structured(0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_structured(-1.0, 4), std::invalid_argument);
}

TEST_CASE("face geometry") {
  const Mesh m = build_structured(0.125, 2);

  SUBCASE("bottom boundary face has outward normal (0,-1)") {
    for (int bo = 0; bo < m.n_boundary_faces(); ++bo) {
      const int f = m.boundary_faces[bo];
      const Vec2 mid = m.face_point(f, 0.5);
      if (std::abs(mid.y) > 1e-14) continue;
      const FaceGeometry fg = face_geometry(m, f, m.faces[f].elems[0]);
      CHECK(fg.normal.x == doctest::Approx(0.0).epsilon(1e-14));
      CHECK(fg.normal.y == doctest::Approx(-1.0).epsilon(1e-14));
      CHECK(fg.length == doctest::Approx(1.0 / 16.0).epsilon(1e-14));
    }
  }

  SUBCASE("interior normals are unit and opposite from the two sides") {
    for (int f : m.interior_faces) {
      const FaceGeometry a = face_geometry(m, f, m.faces[f].elems[0]);
      const FaceGeometry b = face_geometry(m, f, m.faces[f].elems[1]);
      CHECK(a.normal.norm() == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(a.normal.x + b.normal.x == doctest::Approx(0.0).epsilon(1e-14));
      CHECK(a.normal.y + b.normal.y == doctest::Approx(0.0).epsilon(1e-14));
    }
  }

  SUBCASE("diagonal faces of the LL-UR split have normal +-(1,-1)/sqrt(2)") {
    int n_diag = 0;
    for (int f : m.interior_faces) {
      const Vec2 a = m.vertices[m.faces[f].v[0]];
      const Vec2 b = m.vertices[m.faces[f].v[1]];
      const Vec2 t = b - a;
      if (std::abs(t.x) < 1e-14 || std::abs(t.y) < 1e-14) continue;  // axis-aligned
      ++n_diag;
      const FaceGeometry fg = face_geometry(m, f, m.faces[f].elems[0]);
      CHECK(std::abs(fg.normal.x) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
      CHECK(fg.normal.x + fg.normal.y == doctest::Approx(0.0).epsilon(1e-14));
    }
    CHECK(n_diag == 4);  // one diagonal per cell
  }

  SUBCASE("non-adjacent element is rejected") {
    const int f = m.boundary_faces[0];
    int other = 0;
    while (other == m.faces[f].elems[0]) ++other;
    CHECK_THROWS_AS(face_geometry(m, f, other), std::invalid_argument);
  }
}

TEST_CASE("refinement nesting") {
  const Mesh coarse = build_structured(0.125, 1);
  const RefinedMesh fine = refine(coarse);
  CHECK(fine.mesh.subdivisions == 2);
  CHECK(fine.mesh.n_elements() == 8);

  SUBCASE("each coarse element receives four children") {
    std::vector<int> counts(coarse.n_elements(), 0);
    for (int parent : fine.parent_element) ++counts[parent];
    for (int c : counts) CHECK(c == 4);
  }

  SUBCASE("children lie inside their parent (centroid containment)") {
    for (int e = 0; e < fine.mesh.n_elements(); ++e) {
      const Vec2 c = fine.mesh.centroid(e);
      const int parent = fine.parent_element[e];
      const ElementGeometry geo = coarse.element_geometry(parent);
      const Vec2 ref = geo.unmap(c);
      CHECK(ref.x >= -1e-14);
      CHECK(ref.y >= -1e-14);
      CHECK(ref.x + ref.y <= 1.0 + 1e-14);
    }
  }

  SUBCASE("coarse vertices are preserved") {
    std::set<std::pair<double, double>> fine_coords;
    for (const Vec2& v : fine.mesh.vertices) fine_coords.insert({v.x, v.y});
    for (const Vec2& v : coarse.vertices) CHECK(fine_coords.count({v.x, v.y}) == 1);
  }

  SUBCASE("boundary-face parents contain the child midpoint") {
    for (int bo = 0; bo < fine.mesh.n_boundary_faces(); ++bo) {
      const int cf = coarse.boundary_faces[fine.parent_boundary_face[bo]];
      const Vec2 a = coarse.vertices[coarse.faces[cf].v[0]];
      const Vec2 d = coarse.vertices[coarse.faces[cf].v[1]] - a;
      const Vec2 mid = fine.mesh.face_point(fine.mesh.boundary_faces[bo], 0.5);
      const double t = (mid - a).dot(d) / d.dot(d);
      CHECK(t >= -1e-14);
      CHECK(t <= 1.0 + 1e-14);
      // collinearity
      CHECK(std::abs((mid.x - a.x) * d.y - (mid.y - a.y) * d.x) < 1e-15);
    }
  }
}

TEST_CASE("three refinements quadruple-quadruple-quadruple n=2 to n=16") {
  Mesh m = build_structured(0.125, 2);
  for (int i = 0; i < 3; ++i) m = refine(m).mesh;
  CHECK(m.subdivisions == 16);
  CHECK(m.n_elements() == 512);
}

TEST_CASE("hierarchy ancestor composition") {
  const MeshHierarchy h = build_hierarchy(0.125, 2, 4);  // n = 2, 4, 8, 16
  CHECK(h.level_of(8) == 2);
  CHECK(h.level_of(3) == -1);
  for (int e = 0; e < h.levels[3].n_elements(); ++e) {
    const Vec2 c = h.levels[3].centroid(e);
    const int a = h.ancestor_element(3, 0, e);
    const ElementGeometry geo = h.levels[0].element_geometry(a);
    const Vec2 ref = geo.unmap(c);
    CHECK(ref.x >= -1e-14);
    CHECK(ref.y >= -1e-14);
    CHECK(ref.x + ref.y <= 1.0 + 1e-14);
  }
}

TEST_CASE("mesh dump sections") {
  const Mesh m = build_structured(0.125, 1);
  std::ostringstream out;
  write_mesh(out, m);
  const std::string text = out.str();
  CHECK(text.find("VERTICES 4") != std::string::npos);
  CHECK(text.find("TRIANGLES 2") != std::string::npos);
  CHECK(text.find("FACES 5") != std::string::npos);
}
