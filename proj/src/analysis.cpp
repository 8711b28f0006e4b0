#include "hdgbc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "hdgbc/basis.hpp"
#include "hdgbc/quadrature.hpp"

namespace hdgbc {

ExpectedRates ExpectedRates::from_regularity(int k, double r_q, double r_y, double r_p,
                                             double r_z) {
  ExpectedRates r;
  r.k = k;
  r.s_q = std::min(r_q, double(k + 1));
  r.s_y = std::min(r_y, double(k + 2));
  r.s_p = std::min(r_p, double(k + 1));
  r.s_z = std::min(r_z, double(k + 2));
  r.k0_regime = (k == 0);
  return r;
}

ExpectedRates ExpectedRates::benchmark_case(int k) {
  // omega = pi/2 and y_d in H^{1/3-eps}: the optimality-system solution has
  // u in H^{5/6}, (p, y) in H^{4/3}, z in H^{7/3}, q in H^{1/3}.
  ExpectedRates r = from_regularity(k, 1.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0, 7.0 / 3.0);
  r.omega = M_PI / 2.0;
  r.t_star = 1.0 / 3.0;
  r.r_d = 0.5 + r.t_star;
  r.r_omega = std::min(1.5, M_PI / r.omega - 0.5);
  r.control_rate = std::min(r.r_d, r.r_omega);
  return r;
}

void RateTable::compute_rates() {
  for (size_t i = 0; i < rows.size(); ++i) {
    RateRow& r = rows[i];
    r.level = static_cast<int>(i) + 1;
    if (i == 0) {
      r.has_rates = false;
      continue;
    }
    const RateRow& prev = rows[i - 1];
    auto order = [](double coarse, double fine) {
      if (coarse <= 0.0 || fine <= 0.0) return 0.0;
      return std::log2(coarse / fine);
    };
    r.rate_q = order(prev.err_q, r.err_q);
    r.rate_p = order(prev.err_p, r.err_p);
    r.rate_y = order(prev.err_y, r.err_y);
    r.rate_z = order(prev.err_z, r.err_z);
    r.rate_u = order(prev.err_u, r.err_u);
    r.has_rates = true;
  }
}

namespace {

int default_volume_degree(int field_degree) { return 2 * field_degree + 8; }

void check_levels(const MeshHierarchy& h, int coarse_level, int fine_level) {
  if (coarse_level < 0 || fine_level >= h.n_levels() || coarse_level > fine_level)
    throw std::invalid_argument("hierarchy error transfer: meshes are not nested levels");
}

}  // namespace

double l2_error_volume(const ScalarField& field, const Mesh& mesh,
                       const std::function<double(Vec2)>& exact, int quadrature_degree) {
  const TriBasis basis(field.degree);
  const TriangleRule rule = quadrature_triangle(
      quadrature_degree >= 0 ? quadrature_degree : default_volume_degree(field.degree));
  const Eigen::MatrixXd W = basis.values(rule.points);

  double err2 = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const ElementGeometry geo = mesh.element_geometry(e);
    const double* c = field.elem(e);
    for (int q = 0; q < rule.size(); ++q) {
      double v = 0.0;
      for (int i = 0; i < field.block; ++i) v += c[i] * W(q, i);
      const double d = v - exact(geo.map(rule.points[q]));
      err2 += rule.weights[q] * geo.detJ * d * d;
    }
  }
  return std::sqrt(err2);
}

double l2_error_volume(const VectorField& field, const Mesh& mesh,
                       const std::function<Vec2(Vec2)>& exact, int quadrature_degree) {
  const TriBasis basis(field.degree);
  const TriangleRule rule = quadrature_triangle(
      quadrature_degree >= 0 ? quadrature_degree : default_volume_degree(field.degree));
  const Eigen::MatrixXd W = basis.values(rule.points);

  double err2 = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const ElementGeometry geo = mesh.element_geometry(e);
    const double* cx = field.comp(e, 0);
    const double* cy = field.comp(e, 1);
    for (int q = 0; q < rule.size(); ++q) {
      double vx = 0.0, vy = 0.0;
      for (int i = 0; i < field.block; ++i) {
        vx += cx[i] * W(q, i);
        vy += cy[i] * W(q, i);
      }
      const Vec2 ex = exact(geo.map(rule.points[q]));
      const double dx = vx - ex.x, dy = vy - ex.y;
      err2 += rule.weights[q] * geo.detJ * (dx * dx + dy * dy);
    }
  }
  return std::sqrt(err2);
}

double l2_error_volume(const ScalarField& coarse, int coarse_level, const ScalarField& fine,
                       int fine_level, const MeshHierarchy& hierarchy, int quadrature_degree) {
  check_levels(hierarchy, coarse_level, fine_level);
  const Mesh& fine_mesh = hierarchy.levels[fine_level];
  const Mesh& coarse_mesh = hierarchy.levels[coarse_level];
  const TriBasis cb(coarse.degree), fb(fine.degree);
  const TriangleRule rule = quadrature_triangle(
      quadrature_degree >= 0 ? quadrature_degree
                             : default_volume_degree(std::max(coarse.degree, fine.degree)));
  const Eigen::MatrixXd Wf = fb.values(rule.points);

  double err2 = 0.0;
  std::vector<Vec2> coarse_ref(rule.size());
  for (int e = 0; e < fine_mesh.n_elements(); ++e) {
    const ElementGeometry geo = fine_mesh.element_geometry(e);
    const int a = hierarchy.ancestor_element(fine_level, coarse_level, e);
    const ElementGeometry ageo = coarse_mesh.element_geometry(a);
    for (int q = 0; q < rule.size(); ++q) coarse_ref[q] = ageo.unmap(geo.map(rule.points[q]));
    const Eigen::MatrixXd Wc = cb.values(coarse_ref);
    const double* cc = coarse.elem(a);
    const double* cf = fine.elem(e);
    for (int q = 0; q < rule.size(); ++q) {
      double vc = 0.0, vf = 0.0;
      for (int i = 0; i < coarse.block; ++i) vc += cc[i] * Wc(q, i);
      for (int i = 0; i < fine.block; ++i) vf += cf[i] * Wf(q, i);
      const double d = vc - vf;
      err2 += rule.weights[q] * geo.detJ * d * d;
    }
  }
  return std::sqrt(err2);
}

double l2_error_volume(const VectorField& coarse, int coarse_level, const VectorField& fine,
                       int fine_level, const MeshHierarchy& hierarchy, int quadrature_degree) {
  check_levels(hierarchy, coarse_level, fine_level);
  const Mesh& fine_mesh = hierarchy.levels[fine_level];
  const Mesh& coarse_mesh = hierarchy.levels[coarse_level];
  const TriBasis cb(coarse.degree), fb(fine.degree);
  const TriangleRule rule = quadrature_triangle(
      quadrature_degree >= 0 ? quadrature_degree
                             : default_volume_degree(std::max(coarse.degree, fine.degree)));
  const Eigen::MatrixXd Wf = fb.values(rule.points);

  double err2 = 0.0;
  std::vector<Vec2> coarse_ref(rule.size());
  for (int e = 0; e < fine_mesh.n_elements(); ++e) {
    const ElementGeometry geo = fine_mesh.element_geometry(e);
    const int a = hierarchy.ancestor_element(fine_level, coarse_level, e);
    const ElementGeometry ageo = coarse_mesh.element_geometry(a);
    for (int q = 0; q < rule.size(); ++q) coarse_ref[q] = ageo.unmap(geo.map(rule.points[q]));
    const Eigen::MatrixXd Wc = cb.values(coarse_ref);
    for (int comp = 0; comp < 2; ++comp) {
      const double* cc = coarse.comp(a, comp);
      const double* cf = fine.comp(e, comp);
      for (int q = 0; q < rule.size(); ++q) {
        double vc = 0.0, vf = 0.0;
        for (int i = 0; i < coarse.block; ++i) vc += cc[i] * Wc(q, i);
        for (int i = 0; i < fine.block; ++i) vf += cf[i] * Wf(q, i);
        const double d = vc - vf;
        err2 += rule.weights[q] * geo.detJ * d * d;
      }
    }
  }
  return std::sqrt(err2);
}

double l2_error_boundary(const TraceField& trace, const Mesh& mesh,
                         const std::function<double(Vec2)>& exact, int quadrature_degree) {
  const EdgeBasis basis(trace.degree);
  const EdgeRule rule =
      quadrature_edge(quadrature_degree >= 0 ? quadrature_degree : 2 * trace.degree + 8);
  const Eigen::MatrixXd Tb = basis.values(rule.points);

  double err2 = 0.0;
  for (int bo = 0; bo < mesh.n_boundary_faces(); ++bo) {
    const int face = mesh.boundary_faces[bo];
    const double len = mesh.faces[face].length;
    const double* c = trace.face(bo);
    for (int q = 0; q < rule.size(); ++q) {
      double v = 0.0;
      for (int i = 0; i < trace.block; ++i) v += c[i] * Tb(q, i);
      const double d = v - exact(mesh.face_point(face, rule.points[q]));
      err2 += rule.weights[q] * len * d * d;
    }
  }
  return std::sqrt(err2);
}

double l2_error_boundary(const TraceField& coarse, int coarse_level, const TraceField& fine,
                         int fine_level, const MeshHierarchy& hierarchy, int quadrature_degree) {
  check_levels(hierarchy, coarse_level, fine_level);
  const Mesh& fine_mesh = hierarchy.levels[fine_level];
  const Mesh& coarse_mesh = hierarchy.levels[coarse_level];
  const EdgeBasis cb(coarse.degree), fb(fine.degree);
  const EdgeRule rule = quadrature_edge(
      quadrature_degree >= 0 ? quadrature_degree : 2 * std::max(coarse.degree, fine.degree) + 8);
  const Eigen::MatrixXd Tf = fb.values(rule.points);

  double err2 = 0.0;
  for (int bo = 0; bo < fine_mesh.n_boundary_faces(); ++bo) {
    const int face = fine_mesh.boundary_faces[bo];
    const double len = fine_mesh.faces[face].length;
    const int abo = hierarchy.ancestor_boundary_face(fine_level, coarse_level, bo);
    const int aface = coarse_mesh.boundary_faces[abo];
    const Vec2 a = coarse_mesh.vertices[coarse_mesh.faces[aface].v[0]];
    const Vec2 d = coarse_mesh.vertices[coarse_mesh.faces[aface].v[1]] - a;
    const double dd = d.dot(d);

    std::vector<double> tc(rule.size());
    for (int q = 0; q < rule.size(); ++q)
      tc[q] = (fine_mesh.face_point(face, rule.points[q]) - a).dot(d) / dd;
    const Eigen::MatrixXd Tc = cb.values(tc);
    const double* cc = coarse.face(abo);
    const double* cf = fine.face(bo);
    for (int q = 0; q < rule.size(); ++q) {
      double vc = 0.0, vf = 0.0;
      for (int i = 0; i < coarse.block; ++i) vc += cc[i] * Tc(q, i);
      for (int i = 0; i < fine.block; ++i) vf += cf[i] * Tf(q, i);
      const double diff = vc - vf;
      err2 += rule.weights[q] * len * diff * diff;
    }
  }
  return std::sqrt(err2);
}

double l2_norm_volume(const ScalarField& field, const Mesh& mesh) {
  double n2 = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const double detJ = 2.0 * mesh.area(e);
    const double* c = field.elem(e);
    for (int i = 0; i < field.block; ++i) n2 += detJ * c[i] * c[i];
  }
  return std::sqrt(n2);
}

double l2_norm_volume(const VectorField& field, const Mesh& mesh) {
  double n2 = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const double detJ = 2.0 * mesh.area(e);
    for (int comp = 0; comp < 2; ++comp) {
      const double* c = field.comp(e, comp);
      for (int i = 0; i < field.block; ++i) n2 += detJ * c[i] * c[i];
    }
  }
  return std::sqrt(n2);
}

double l2_norm_boundary(const TraceField& trace, const Mesh& mesh) {
  double n2 = 0.0;
  for (int bo = 0; bo < mesh.n_boundary_faces(); ++bo) {
    const double len = mesh.faces[mesh.boundary_faces[bo]].length;
    const double* c = trace.face(bo);
    for (int i = 0; i < trace.block; ++i) n2 += len * c[i] * c[i];
  }
  return std::sqrt(n2);
}

namespace {

double misfit_on_subtriangle(const TriBasis& basis, const TriangleRule& rule,
                             const ElementGeometry& geo, const double* coeffs, int block,
                             const std::function<double(Vec2)>& y_d, int levels, double scale,
                             Vec2 r0, Vec2 r1, Vec2 r2) {
  if (levels == 0) {
    std::vector<Vec2> pts(rule.size());
    for (int q = 0; q < rule.size(); ++q) {
      const Vec2 ref = rule.points[q];
      pts[q] = {r0.x + (r1.x - r0.x) * ref.x + (r2.x - r0.x) * ref.y,
                r0.y + (r1.y - r0.y) * ref.x + (r2.y - r0.y) * ref.y};
    }
    const Eigen::MatrixXd W = basis.values(pts);
    double acc = 0.0;
    for (int q = 0; q < rule.size(); ++q) {
      double v = 0.0;
      for (int i = 0; i < block; ++i) v += coeffs[i] * W(q, i);
      const double d = v - y_d(geo.map(pts[q]));
      acc += rule.weights[q] * scale * geo.detJ * d * d;
    }
    return acc;
  }
  const Vec2 m01{0.5 * (r0.x + r1.x), 0.5 * (r0.y + r1.y)};
  const Vec2 m12{0.5 * (r1.x + r2.x), 0.5 * (r1.y + r2.y)};
  const Vec2 m02{0.5 * (r0.x + r2.x), 0.5 * (r0.y + r2.y)};
  return misfit_on_subtriangle(basis, rule, geo, coeffs, block, y_d, levels - 1, scale * 0.25, r0,
                               m01, m02) +
         misfit_on_subtriangle(basis, rule, geo, coeffs, block, y_d, levels - 1, scale * 0.25,
                               m01, r1, m12) +
         misfit_on_subtriangle(basis, rule, geo, coeffs, block, y_d, levels - 1, scale * 0.25,
                               m02, m12, r2) +
         misfit_on_subtriangle(basis, rule, geo, coeffs, block, y_d, levels - 1, scale * 0.25,
                               m01, m12, m02);
}

bool elem_touches_origin(const Mesh& mesh, int e) {
  for (int v : mesh.triangles[e]) {
    const Vec2 p = mesh.vertices[v];
    if (std::abs(p.x) < 1e-14 && std::abs(p.y) < 1e-14) return true;
  }
  return false;
}

}  // namespace

double cost_functional(const SolutionFields& sol, const Mesh& mesh, const ProblemData& data,
                       const DiscretizationOptions& opts) {
  const ScalarField y = sol.y_field();
  const TriBasis basis(y.degree);
  const TriangleRule rule = quadrature_triangle(default_volume_degree(y.degree));

  double misfit2 = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const ElementGeometry geo = mesh.element_geometry(e);
    const int levels =
        (opts.origin_subdivision > 0 && elem_touches_origin(mesh, e)) ? opts.origin_subdivision
                                                                      : 0;
    misfit2 += misfit_on_subtriangle(basis, rule, geo, y.elem(e), y.block, data.desired_state,
                                     levels, 1.0, {0, 0}, {1, 0}, {0, 1});
  }

  const TraceField u = sol.u_field();
  const double un = l2_norm_boundary(u, mesh);
  return 0.5 * misfit2 + 0.5 * data.gamma * un * un;
}

void write_csv(std::ostream& out, const RateTable& table) {
  out << "level,n,h,err_q,rate_q,err_p,rate_p,err_y,rate_y,err_z,rate_z,err_u,rate_u,J\n";
  char buf[64];
  auto sci = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.5e", v);
    return std::string(buf);
  };
  auto rate = [&buf](double v, bool has) {
    if (!has) return std::string();
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
  };
  for (const RateRow& r : table.rows) {
    out << r.level << ',' << r.n << ',' << sci(r.h) << ',' << sci(r.err_q) << ','
        << rate(r.rate_q, r.has_rates) << ',' << sci(r.err_p) << ','
        << rate(r.rate_p, r.has_rates) << ',' << sci(r.err_y) << ','
        << rate(r.rate_y, r.has_rates) << ',' << sci(r.err_z) << ','
        << rate(r.rate_z, r.has_rates) << ',' << sci(r.err_u) << ','
        << rate(r.rate_u, r.has_rates) << ',' << sci(r.cost) << "\n";
  }
}

void write_plot_script(std::ostream& out, const std::string& csv_name) {
  out << "set datafile separator ','\n"
         "set logscale xy\n"
         "set xlabel 'h'\n"
         "set ylabel 'L2 error'\n"
         "set key left top\n"
         "plot '" << csv_name << "' using 3:4 with linespoints title 'q', \\\n"
         "     '" << csv_name << "' using 3:6 with linespoints title 'p', \\\n"
         "     '" << csv_name << "' using 3:8 with linespoints title 'y', \\\n"
         "     '" << csv_name << "' using 3:10 with linespoints title 'z', \\\n"
         "     '" << csv_name << "' using 3:12 with linespoints title 'u'\n";
}

}  // namespace hdgbc
