#include "hdgbc/identities.hpp"

#include <cmath>

#include "hdgbc/basis.hpp"
#include "hdgbc/quadrature.hpp"
#include "hdgbc/sparse.hpp"

namespace hdgbc {

double energy_identity_rhs(bool adjoint_side, const DiscreteTuple& t, const Mesh& mesh,
                           const ProblemData& data, int k, const DiscretizationOptions& opts) {
  const DofMap map = build_dof_map(mesh, k);
  const TriBasis flux_basis(k), scalar_basis(k + 1);
  const EdgeBasis trace_basis(k + 1);
  const TriangleRule vol = quadrature_triangle(2 * (k + 2) + 2);
  const EdgeRule fq = quadrature_edge(2 * (k + 2) + 2);
  const Eigen::MatrixXd Wv = scalar_basis.values(vol.points);
  const Eigen::MatrixXd Vv = flux_basis.values(vol.points);
  const Eigen::MatrixXd Tb = trace_basis.values(fq.points);
  const int F = flux_basis.size(), S = scalar_basis.size(), T = k + 2;
  const double h_global = mesh.h_max();

  double value = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const ElementGeometry geo = mesh.element_geometry(e);
    const double* fx = t.flux.data() + static_cast<size_t>(e) * map.flux_block;
    const double* fy = fx + F;
    const double* sc = t.scalar.data() + static_cast<size_t>(e) * map.scalar_block;

    for (int q = 0; q < vol.size(); ++q) {
      const double w = vol.weights[q] * geo.detJ;
      double vx = 0, vy = 0, wv = 0;
      for (int i = 0; i < F; ++i) {
        vx += fx[i] * Vv(q, i);
        vy += fy[i] * Vv(q, i);
      }
      for (int j = 0; j < S; ++j) wv += sc[j] * Wv(q, j);
      const double div_beta = data.beta.divergence(geo.map(vol.points[q]));
      value += w * (vx * vx + vy * vy - 0.5 * div_beta * wv * wv);
    }

    for (int lf = 0; lf < 3; ++lf) {
      const int face = mesh.element_faces[e][lf];
      const FaceGeometry fg = face_geometry(mesh, face, e);
      const double hinv =
          opts.h_mode == HStabilization::per_face ? 1.0 / fg.length : 1.0 / h_global;
      const bool boundary = mesh.faces[face].boundary;
      const double* mu = nullptr;
      if (!boundary)
        mu = t.trace.data() + static_cast<size_t>(mesh.face_interior_ordinal[face]) * T;

      std::vector<Vec2> ref(fq.size());
      for (int q = 0; q < fq.size(); ++q) ref[q] = geo.unmap(mesh.face_point(face, fq.points[q]));
      const Eigen::MatrixXd Wf = scalar_basis.values(ref);

      for (int q = 0; q < fq.size(); ++q) {
        const double w = fq.weights[q] * fg.length;
        const Vec2 x = mesh.face_point(face, fq.points[q]);
        const double bn = data.beta.value(x).dot(fg.normal);
        const double tau = adjoint_side ? data.tau2 : data.tau1(bn);
        const double weight = hinv + tau + (adjoint_side ? 0.5 * bn : -0.5 * bn);
        double wv = 0;
        for (int j = 0; j < S; ++j) wv += sc[j] * Wf(q, j);
        if (boundary) {
          value += w * weight * wv * wv;
        } else {
          double muv = 0;
          for (int m = 0; m < T; ++m) muv += mu[m] * Tb(q, m);
          value += w * weight * (wv - muv) * (wv - muv);
        }
      }
    }
  }
  return value;
}

double coupling_terms(const std::vector<double>& unknowns, const std::vector<double>& tests,
                      const Mesh& mesh, const ProblemData& data, int k,
                      const DiscretizationOptions& opts) {
  const DofMap map = build_dof_map(mesh, k);
  const TriBasis flux_basis(k), scalar_basis(k + 1);
  const EdgeBasis trace_basis(k + 1);
  const EdgeRule fq = quadrature_edge(2 * (k + 2) + 2);
  const Eigen::MatrixXd Tb = trace_basis.values(fq.points);
  const int F = flux_basis.size(), S = scalar_basis.size(), T = k + 2;
  const double h_global = mesh.h_max();

  double value = 0.0;
  // -(y, w2) over the volume: orthonormal blocks reduce to scaled dots
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const double detJ = 2.0 * mesh.area(e);
    const double* yc = unknowns.data() + map.y_offset(e);
    const double* w2 = tests.data() + map.z_offset(e);
    for (int i = 0; i < S; ++i) value -= detJ * yc[i] * w2[i];
  }

  for (int bo = 0; bo < mesh.n_boundary_faces(); ++bo) {
    const int face = mesh.boundary_faces[bo];
    const int e = mesh.faces[face].elems[0];
    const FaceGeometry fg = face_geometry(mesh, face, e);
    const double hinv =
        opts.h_mode == HStabilization::per_face ? 1.0 / fg.length : 1.0 / h_global;
    const ElementGeometry geo = mesh.element_geometry(e);

    std::vector<Vec2> ref(fq.size());
    for (int q = 0; q < fq.size(); ++q) ref[q] = geo.unmap(mesh.face_point(face, fq.points[q]));
    const Eigen::MatrixXd Wf = scalar_basis.values(ref);
    const Eigen::MatrixXd Vf = flux_basis.values(ref);

    const double* uc = unknowns.data() + map.u_offset(bo);
    const double* pc = unknowns.data() + map.p_offset(e);
    const double* zc = unknowns.data() + map.z_offset(e);
    const double* r1 = tests.data() + map.q_offset(e);
    const double* w1 = tests.data() + map.y_offset(e);
    const double* mu3 = tests.data() + map.u_offset(bo);

    for (int q = 0; q < fq.size(); ++q) {
      const double w = fq.weights[q] * fg.length;
      const Vec2 x = mesh.face_point(face, fq.points[q]);
      const double bn = data.beta.value(x).dot(fg.normal);
      const double tau1 = data.tau1(bn);

      double uv = 0, m3 = 0;
      for (int m = 0; m < T; ++m) {
        uv += uc[m] * Tb(q, m);
        m3 += mu3[m] * Tb(q, m);
      }
      double rn = 0, pn = 0;
      for (int i = 0; i < F; ++i) {
        rn += (r1[i] * fg.normal.x + r1[F + i] * fg.normal.y) * Vf(q, i);
        pn += (pc[i] * fg.normal.x + pc[F + i] * fg.normal.y) * Vf(q, i);
      }
      double w1v = 0, zv = 0;
      for (int j = 0; j < S; ++j) {
        w1v += w1[j] * Wf(q, j);
        zv += zc[j] * Wf(q, j);
      }
      value += w * (uv * rn + (bn - tau1 - hinv) * uv * w1v +
                    (pn + data.gamma * uv + (hinv + data.tau2) * zv) * m3);
    }
  }
  return value;
}

IdentityReport run_identity_checks(const Mesh& mesh, const ProblemData& data, int k,
                                   unsigned long long seed, int energy_tuples,
                                   int consistency_tuples, const DiscretizationOptions& opts) {
  const DofMap map = build_dof_map(mesh, k);
  std::mt19937_64 rng(seed);
  IdentityReport report;
  report.energy_tuples = energy_tuples;
  report.consistency_tuples = consistency_tuples;

  auto rel = [](double a, double b) {
    const double denom = std::abs(a) + std::abs(b);
    return denom > 0.0 ? std::abs(a - b) / denom : std::abs(a - b);
  };

  for (int it = 0; it < energy_tuples; ++it) {
    const DiscreteTuple t = random_tuple(map, rng);
    const double lhs1 = apply_B1(t, t, mesh, data, k, opts);
    const double rhs1 = energy_identity_rhs(false, t, mesh, data, k, opts);
    report.worst_energy_b1 = std::max(report.worst_energy_b1, rel(lhs1, rhs1));

    const double lhs2 = apply_B2(t, t, mesh, data, k, opts);
    const double rhs2 = energy_identity_rhs(true, t, mesh, data, k, opts);
    report.worst_energy_b2 = std::max(report.worst_energy_b2, rel(lhs2, rhs2));

    // adjoint identity: B1(q,y,yh; p,-z,-zh) + B2(p,z,zh; -q,y,yh) = 0
    const DiscreteTuple s = random_tuple(map, rng);
    DiscreteTuple neg_s = s;
    for (double& v : neg_s.scalar) v = -v;
    for (double& v : neg_s.trace) v = -v;
    DiscreteTuple neg_t_flux = t;
    for (double& v : neg_t_flux.flux) v = -v;
    const double a1 = apply_B1(t, {s.flux, neg_s.scalar, neg_s.trace}, mesh, data, k, opts);
    const double a2 = apply_B2(s, {neg_t_flux.flux, t.scalar, t.trace}, mesh, data, k, opts);
    const double scale = std::abs(a1) + std::abs(a2);
    report.worst_adjoint =
        std::max(report.worst_adjoint, scale > 0.0 ? std::abs(a1 + a2) / scale : 0.0);
  }

  if (consistency_tuples > 0) {
    const LinearSystem sys = assemble_monolithic(mesh, data, k, opts);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int it = 0; it < consistency_tuples; ++it) {
      std::vector<double> X(map.total), Xt(map.total);
      for (double& v : X) v = dist(rng);
      for (double& v : Xt) v = dist(rng);

      const std::vector<double> AX = spmv(sys.A, X);
      double lhs = 0.0;
      for (int i = 0; i < map.total; ++i) lhs += Xt[i] * AX[i];

      // slice the monolithic vectors into operator tuples
      auto slice = [&](const std::vector<double>& v, bool adjoint) {
        DiscreteTuple t2;
        t2.flux.resize(static_cast<size_t>(map.n_elements) * map.flux_block);
        t2.scalar.resize(static_cast<size_t>(map.n_elements) * map.scalar_block);
        t2.trace.resize(static_cast<size_t>(map.n_interior_faces) * map.trace_block);
        for (int e = 0; e < map.n_elements; ++e) {
          const int fo = adjoint ? map.p_offset(e) : map.q_offset(e);
          const int so = adjoint ? map.z_offset(e) : map.y_offset(e);
          for (int i = 0; i < map.flux_block; ++i)
            t2.flux[static_cast<size_t>(e) * map.flux_block + i] = v[fo + i];
          for (int i = 0; i < map.scalar_block; ++i)
            t2.scalar[static_cast<size_t>(e) * map.scalar_block + i] = v[so + i];
        }
        for (int io = 0; io < map.n_interior_faces; ++io) {
          const int to = adjoint ? map.zhat_offset(io) : map.yhat_offset(io);
          for (int i = 0; i < map.trace_block; ++i)
            t2.trace[static_cast<size_t>(io) * map.trace_block + i] = v[to + i];
        }
        return t2;
      };
      const DiscreteTuple trial1 = slice(X, false), trial2 = slice(X, true);
      DiscreteTuple test1 = slice(Xt, false), test2 = slice(Xt, true);
      // the assembled flux-continuity rows carry the opposite sign of the
      // operators' trace tests
      for (double& v : test1.trace) v = -v;
      for (double& v : test2.trace) v = -v;

      const double rhs = apply_B1(trial1, test1, mesh, data, k, opts) +
                         apply_B2(trial2, test2, mesh, data, k, opts) +
                         coupling_terms(X, Xt, mesh, data, k, opts);
      report.worst_consistency = std::max(report.worst_consistency, rel(lhs, rhs));
    }
  }
  return report;
}

}  // namespace hdgbc
