#include "hdgbc/hdg.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "hdgbc/basis.hpp"
#include "hdgbc/errors.hpp"
#include "hdgbc/parallel.hpp"
#include "hdgbc/quadrature.hpp"

namespace hdgbc {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

int scalar_dim(int k) { return (k + 2) * (k + 3) / 2; }
int flux_component_dim(int k) { return (k + 1) * (k + 2) / 2; }

// Reference-point tables shared by all elements of one congruence class of the
// structured mesh (even ids: triangles below the cell diagonal, odd: above).
struct ParityTables {
  double detJ = 0.0;
  double J[2][2];
  // volume rule tables
  MatrixXd Wv, Vv;          // scalar / flux-component values
  MatrixXd GWx, GWy;        // physical gradients of the scalar basis
  MatrixXd GVx, GVy;        // physical gradients of the flux-component basis
  // face rule tables per local face, at the canonical face parameterization
  std::array<MatrixXd, 3> Wf, Vf;
  std::array<Vec2, 3> normal;
  std::array<double, 3> face_length;
};

struct AsmContext {
  const Mesh& mesh;
  const ProblemData& data;
  int k;
  DiscretizationOptions opts;

  TriBasis flux_basis;
  TriBasis scalar_basis;
  EdgeBasis trace_basis;
  TriangleRule vol;
  EdgeRule fq;
  MatrixXd Tb;  // trace basis at face rule points
  double h_global;

  int F;  // flux-component dim
  int S;  // scalar dim
  int T;  // trace dim

  std::array<ParityTables, 2> par;

  AsmContext(const Mesh& m, const ProblemData& d, int degree, const DiscretizationOptions& o)
      : mesh(m),
        data(d),
        k(degree),
        opts(o),
        flux_basis(degree),
        scalar_basis(degree + 1),
        trace_basis(degree + 1),
        vol(quadrature_triangle(2 * (degree + 2) + 2)),
        fq(quadrature_edge(2 * (degree + 2) + 2)),
        h_global(m.h_max()),
        F(flux_component_dim(degree)),
        S(scalar_dim(degree)),
        T(degree + 2) {
    Tb = trace_basis.values(fq.points);
    for (int parity = 0; parity < 2; ++parity) build_parity(parity);
    verify_congruence();
  }

  double hinv(int parity, int lf) const {
    return opts.h_mode == HStabilization::per_face ? 1.0 / par[parity].face_length[lf]
                                                   : 1.0 / h_global;
  }

private:
  void build_parity(int parity) {
    ParityTables& t = par[parity];
    const int e = parity;  // exemplar element
    const ElementGeometry geo = mesh.element_geometry(e);
    t.detJ = geo.detJ;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) t.J[i][j] = geo.J[i][j];

    t.Wv = scalar_basis.values(vol.points);
    t.Vv = flux_basis.values(vol.points);
    auto [gwx, gwy] = scalar_basis.gradients(vol.points);
    auto [gvx, gvy] = flux_basis.gradients(vol.points);
    // push reference gradients with J^{-T}
    t.GWx = geo.invJ[0][0] * gwx + geo.invJ[1][0] * gwy;
    t.GWy = geo.invJ[0][1] * gwx + geo.invJ[1][1] * gwy;
    t.GVx = geo.invJ[0][0] * gvx + geo.invJ[1][0] * gvy;
    t.GVy = geo.invJ[0][1] * gvx + geo.invJ[1][1] * gvy;

    for (int lf = 0; lf < 3; ++lf) {
      const int face = mesh.element_faces[e][lf];
      const FaceGeometry fg = face_geometry(mesh, face, e);
      t.normal[lf] = fg.normal;
      t.face_length[lf] = fg.length;
      std::vector<Vec2> ref(fq.size());
      for (int q = 0; q < fq.size(); ++q) ref[q] = geo.unmap(mesh.face_point(face, fq.points[q]));
      t.Wf[lf] = scalar_basis.values(ref);
      t.Vf[lf] = flux_basis.values(ref);
    }
  }

  // The structured mesh is two translated congruence classes; make sure.
  void verify_congruence() const {
    for (int e = 0; e < mesh.n_elements(); ++e) {
      const ElementGeometry geo = mesh.element_geometry(e);
      const ParityTables& t = par[e % 2];
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          if (std::abs(geo.J[i][j] - t.J[i][j]) > 1e-13 * (std::abs(t.J[i][j]) + 1.0))
            throw std::logic_error("assembly requires the structured two-class mesh");
    }
  }
};

// Dense element-local blocks of the seven coupled forms.
struct ElementBlocks {
  MatrixXd Mq;    // (2F)x(2F) flux mass
  MatrixXd Aqy;   // (2F)xS    -(y, div r)
  MatrixXd Ayq;   // Sx(2F)    (div q, w)
  MatrixXd Ayy;   // SxS       convection/divergence/stabilization, tau1 side
  MatrixXd Azz;   // SxS       adjoint counterpart, tau2 side
  MatrixXd Mss;   // SxS scalar mass
  std::array<MatrixXd, 3> Qn;     // (2F)xT  <s, r.n>
  std::array<MatrixXd, 3> Byhat;  // SxT     <(b.n - tau1 - hinv) s, w>
  std::array<MatrixXd, 3> Dzhat;  // SxT     -<(hinv + tau2 + b.n) s, w>
  std::array<MatrixXd, 3> Ey;     // TxS     <(hinv + tau1) y, mu>
  std::array<MatrixXd, 3> Eyhat;  // TxT     <(b.n - tau1 - hinv) s, mu>
  std::array<MatrixXd, 3> Fz;     // TxS     <(hinv + tau2) z, mu>
  std::array<MatrixXd, 3> Fzhat;  // TxT     -<(hinv + tau2 + b.n) s, mu>
  std::array<MatrixXd, 3> Gu;     // TxT     gamma <u, mu>
  VectorXd loadF;                 // (f, w)
  VectorXd loadYd;                // (y_d, w)
};

// Composite integration of g against the scalar basis, subdividing the
// reference triangle `levels` times (used for the singular desired state on
// the elements touching the domain corner at the origin).
void accumulate_subdivided(const AsmContext& ctx, const ElementGeometry& geo,
                           const std::function<double(Vec2)>& g, int levels, double scale,
                           Vec2 r0, Vec2 r1, Vec2 r2, VectorXd& out) {
  if (levels == 0) {
    std::vector<Vec2> pts(ctx.vol.size());
    for (int q = 0; q < ctx.vol.size(); ++q) {
      const Vec2 ref = ctx.vol.points[q];
      pts[q] = {r0.x + (r1.x - r0.x) * ref.x + (r2.x - r0.x) * ref.y,
                r0.y + (r1.y - r0.y) * ref.x + (r2.y - r0.y) * ref.y};
    }
    const MatrixXd W = ctx.scalar_basis.values(pts);
    for (int q = 0; q < ctx.vol.size(); ++q) {
      const double gw = g(geo.map(pts[q])) * ctx.vol.weights[q] * scale * geo.detJ;
      for (int i = 0; i < ctx.S; ++i) out(i) += gw * W(q, i);
    }
    return;
  }
  const Vec2 m01{0.5 * (r0.x + r1.x), 0.5 * (r0.y + r1.y)};
  const Vec2 m12{0.5 * (r1.x + r2.x), 0.5 * (r1.y + r2.y)};
  const Vec2 m02{0.5 * (r0.x + r2.x), 0.5 * (r0.y + r2.y)};
  accumulate_subdivided(ctx, geo, g, levels - 1, scale * 0.25, r0, m01, m02, out);
  accumulate_subdivided(ctx, geo, g, levels - 1, scale * 0.25, m01, r1, m12, out);
  accumulate_subdivided(ctx, geo, g, levels - 1, scale * 0.25, m02, m12, r2, out);
  accumulate_subdivided(ctx, geo, g, levels - 1, scale * 0.25, m01, m12, m02, out);
}

bool touches_origin(const Mesh& mesh, int e) {
  for (int v : mesh.triangles[e]) {
    const Vec2 p = mesh.vertices[v];
    if (std::abs(p.x) < 1e-14 && std::abs(p.y) < 1e-14) return true;
  }
  return false;
}

VectorXd scalar_load(const AsmContext& ctx, int e, const std::function<double(Vec2)>& g,
                     bool origin_rule) {
  const ElementGeometry geo = ctx.mesh.element_geometry(e);
  VectorXd out = VectorXd::Zero(ctx.S);
  const int levels =
      (origin_rule && ctx.opts.origin_subdivision > 0 && touches_origin(ctx.mesh, e))
          ? ctx.opts.origin_subdivision
          : 0;
  if (levels > 0) {
    accumulate_subdivided(ctx, geo, g, levels, 1.0, {0, 0}, {1, 0}, {0, 1}, out);
    return out;
  }
  const ParityTables& t = ctx.par[e % 2];
  for (int q = 0; q < ctx.vol.size(); ++q) {
    const double gw = g(geo.map(ctx.vol.points[q])) * ctx.vol.weights[q] * t.detJ;
    for (int i = 0; i < ctx.S; ++i) out(i) += gw * t.Wv(q, i);
  }
  return out;
}

ElementBlocks compute_element_blocks(const AsmContext& ctx, int e) {
  const ParityTables& t = ctx.par[e % 2];
  const ElementGeometry geo = ctx.mesh.element_geometry(e);
  const int F = ctx.F, S = ctx.S, T = ctx.T;
  const double detJ = t.detJ;

  ElementBlocks b;
  b.Mq = MatrixXd::Zero(2 * F, 2 * F);
  b.Aqy = MatrixXd::Zero(2 * F, S);
  b.Ayq = MatrixXd::Zero(S, 2 * F);
  b.Ayy = MatrixXd::Zero(S, S);
  b.Azz = MatrixXd::Zero(S, S);
  b.Mss = MatrixXd::Zero(S, S);

  // volume terms
  for (int q = 0; q < ctx.vol.size(); ++q) {
    const double w = ctx.vol.weights[q] * detJ;
    const Vec2 x = geo.map(ctx.vol.points[q]);
    const Vec2 beta = ctx.data.beta.value(x);
    const double div_beta = ctx.data.beta.divergence(x);
    for (int i = 0; i < F; ++i) {
      const double vi = t.Vv(q, i);
      for (int j = 0; j < F; ++j) {
        const double m = w * vi * t.Vv(q, j);
        b.Mq(i, j) += m;
        b.Mq(F + i, F + j) += m;
      }
      // div r for r = phi_i e_c
      const double divx = t.GVx(q, i), divy = t.GVy(q, i);
      for (int j = 0; j < S; ++j) {
        b.Aqy(i, j) -= w * t.Wv(q, j) * divx;
        b.Aqy(F + i, j) -= w * t.Wv(q, j) * divy;
        b.Ayq(j, i) += w * divx * t.Wv(q, j);
        b.Ayq(j, F + i) += w * divy * t.Wv(q, j);
      }
    }
    for (int i = 0; i < S; ++i) {
      const double conv_i = beta.x * t.GWx(q, i) + beta.y * t.GWy(q, i);
      for (int j = 0; j < S; ++j) {
        const double wj = t.Wv(q, j);
        b.Ayy(i, j) += w * (-conv_i * wj - div_beta * t.Wv(q, i) * wj);
        b.Azz(i, j) += w * conv_i * wj;
        b.Mss(i, j) += w * t.Wv(q, i) * wj;
      }
    }
  }

  // face terms
  for (int lf = 0; lf < 3; ++lf) {
    const int face = ctx.mesh.element_faces[e][lf];
    const double len = t.face_length[lf];
    const double hinv = ctx.hinv(e % 2, lf);
    const Vec2 n = t.normal[lf];
    const MatrixXd& W = t.Wf[lf];
    const MatrixXd& V = t.Vf[lf];

    b.Qn[lf] = MatrixXd::Zero(2 * F, T);
    b.Byhat[lf] = MatrixXd::Zero(S, T);
    b.Dzhat[lf] = MatrixXd::Zero(S, T);
    b.Ey[lf] = MatrixXd::Zero(T, S);
    b.Eyhat[lf] = MatrixXd::Zero(T, T);
    b.Fz[lf] = MatrixXd::Zero(T, S);
    b.Fzhat[lf] = MatrixXd::Zero(T, T);
    b.Gu[lf] = MatrixXd::Zero(T, T);

    for (int q = 0; q < ctx.fq.size(); ++q) {
      const double w = ctx.fq.weights[q] * len;
      const Vec2 x = ctx.mesh.face_point(face, ctx.fq.points[q]);
      const double bn = ctx.data.beta.value(x).dot(n);
      const double tau1 = ctx.data.tau1(bn);
      const double tau2 = ctx.data.tau2;
      const double cy = hinv + tau1;           // stabilized state weight
      const double cyh = bn - tau1 - hinv;     // state trace weight
      const double cz = hinv + tau2;           // stabilized adjoint weight
      const double czh = hinv + tau2 + bn;     // adjoint trace weight

      for (int i = 0; i < F; ++i) {
        const double vi = V(q, i);
        for (int j = 0; j < T; ++j) {
          b.Qn[lf](i, j) += w * ctx.Tb(q, j) * vi * n.x;
          b.Qn[lf](F + i, j) += w * ctx.Tb(q, j) * vi * n.y;
        }
      }
      for (int i = 0; i < S; ++i) {
        const double wi = W(q, i);
        for (int j = 0; j < S; ++j) {
          b.Ayy(i, j) += w * cy * wi * W(q, j);
          b.Azz(i, j) += w * cz * wi * W(q, j);
        }
        for (int j = 0; j < T; ++j) {
          b.Byhat[lf](i, j) += w * cyh * wi * ctx.Tb(q, j);
          b.Dzhat[lf](i, j) -= w * czh * wi * ctx.Tb(q, j);
        }
      }
      for (int i = 0; i < T; ++i) {
        const double mi = ctx.Tb(q, i);
        for (int j = 0; j < S; ++j) {
          b.Ey[lf](i, j) += w * cy * mi * W(q, j);
          b.Fz[lf](i, j) += w * cz * mi * W(q, j);
        }
        for (int j = 0; j < T; ++j) {
          b.Eyhat[lf](i, j) += w * cyh * mi * ctx.Tb(q, j);
          b.Fzhat[lf](i, j) -= w * czh * mi * ctx.Tb(q, j);
          b.Gu[lf](i, j) += w * ctx.data.gamma * mi * ctx.Tb(q, j);
        }
      }
    }
  }

  b.loadF = scalar_load(ctx, e, ctx.data.source, false);
  b.loadYd = scalar_load(ctx, e, ctx.data.desired_state, true);
  return b;
}

void refuse_invalid(const Mesh& mesh, const ProblemData& data) {
  const ValidationReport report = validate(data, mesh);
  if (report.ok()) return;
  std::string msg = "problem data failed validation:";
  for (const auto& c : report.checks)
    if (!c.pass) msg += " [" + c.name + " worst " + std::to_string(c.worst) + "]";
  throw std::invalid_argument(msg);
}

}  // namespace

DofMap build_dof_map(const Mesh& mesh, int k) {
  if (k < 0 || k > 2) throw UnsupportedDegreeError("build_dof_map: k must be in {0,1,2}");
  DofMap m;
  m.degree = k;
  m.flux_block = 2 * flux_component_dim(k);
  m.scalar_block = scalar_dim(k);
  m.trace_block = k + 2;
  m.n_elements = mesh.n_elements();
  m.n_interior_faces = mesh.n_interior_faces();
  m.n_boundary_faces = mesh.n_boundary_faces();
  m.elem_block = 2 * m.flux_block + 2 * m.scalar_block;
  m.interior_total = m.n_elements * m.elem_block;
  m.skeleton_total = m.n_interior_faces * 2 * m.trace_block + m.n_boundary_faces * m.trace_block;
  m.total = m.interior_total + m.skeleton_total;
  return m;
}

ScalarField SolutionFields::y_field() const {
  ScalarField f{map.degree + 1, map.scalar_block, {}};
  f.coeffs.resize(static_cast<size_t>(map.n_elements) * map.scalar_block);
  for (int e = 0; e < map.n_elements; ++e) {
    const auto src = y(e);
    std::copy(src.begin(), src.end(), f.elem(e));
  }
  return f;
}

ScalarField SolutionFields::z_field() const {
  ScalarField f{map.degree + 1, map.scalar_block, {}};
  f.coeffs.resize(static_cast<size_t>(map.n_elements) * map.scalar_block);
  for (int e = 0; e < map.n_elements; ++e) {
    const auto src = z(e);
    std::copy(src.begin(), src.end(), f.elem(e));
  }
  return f;
}

VectorField SolutionFields::q_field() const {
  VectorField f{map.degree, map.flux_block / 2, {}};
  f.coeffs.resize(static_cast<size_t>(map.n_elements) * map.flux_block);
  for (int e = 0; e < map.n_elements; ++e) {
    const auto src = q(e);
    std::copy(src.begin(), src.end(), f.comp(e, 0));
  }
  return f;
}

VectorField SolutionFields::p_field() const {
  VectorField f{map.degree, map.flux_block / 2, {}};
  f.coeffs.resize(static_cast<size_t>(map.n_elements) * map.flux_block);
  for (int e = 0; e < map.n_elements; ++e) {
    const auto src = p(e);
    std::copy(src.begin(), src.end(), f.comp(e, 0));
  }
  return f;
}

TraceField SolutionFields::u_field() const {
  TraceField f{map.degree + 1, map.trace_block, {}};
  f.coeffs.resize(static_cast<size_t>(map.n_boundary_faces) * map.trace_block);
  for (int b = 0; b < map.n_boundary_faces; ++b) {
    const auto src = u(b);
    std::copy(src.begin(), src.end(), f.face(b));
  }
  return f;
}

DiscreteTuple random_tuple(const DofMap& map, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  DiscreteTuple t;
  t.flux.resize(static_cast<size_t>(map.n_elements) * map.flux_block);
  t.scalar.resize(static_cast<size_t>(map.n_elements) * map.scalar_block);
  t.trace.resize(static_cast<size_t>(map.n_interior_faces) * map.trace_block);
  for (double& v : t.flux) v = dist(rng);
  for (double& v : t.scalar) v = dist(rng);
  for (double& v : t.trace) v = dist(rng);
  return t;
}

LinearSystem assemble_monolithic(const Mesh& mesh, const ProblemData& data, int k,
                                 const DiscretizationOptions& opts) {
  refuse_invalid(mesh, data);
  const AsmContext ctx(mesh, data, k, opts);
  const DofMap map = build_dof_map(mesh, k);
  const int S = map.scalar_block;

  std::vector<std::vector<Triplet>> chunks(mesh.n_elements());
  std::vector<double> rhs(map.total, 0.0);

  auto add_block = [](std::vector<Triplet>& out, int row0, int col0, const MatrixXd& blk) {
    for (int i = 0; i < blk.rows(); ++i)
      for (int j = 0; j < blk.cols(); ++j)
        if (blk(i, j) != 0.0) out.push_back({row0 + i, col0 + j, blk(i, j)});
  };

  parallel_for(mesh.n_elements(), [&](int e) {
    const ElementBlocks b = compute_element_blocks(ctx, e);
    std::vector<Triplet>& out = chunks[e];
    const int q0 = map.q_offset(e), y0 = map.y_offset(e);
    const int p0 = map.p_offset(e), z0 = map.z_offset(e);

    add_block(out, q0, q0, b.Mq);
    add_block(out, q0, y0, b.Aqy);
    add_block(out, y0, q0, b.Ayq);
    add_block(out, y0, y0, b.Ayy);
    add_block(out, p0, p0, b.Mq);
    add_block(out, p0, z0, b.Aqy);
    add_block(out, z0, p0, b.Ayq);
    add_block(out, z0, z0, b.Azz);
    add_block(out, z0, y0, -b.Mss);

    for (int lf = 0; lf < 3; ++lf) {
      const int face = mesh.element_faces[e][lf];
      if (!mesh.faces[face].boundary) {
        const int io = mesh.face_interior_ordinal[face];
        const int yh0 = map.yhat_offset(io), zh0 = map.zhat_offset(io);
        add_block(out, q0, yh0, b.Qn[lf]);
        add_block(out, y0, yh0, b.Byhat[lf]);
        add_block(out, p0, zh0, b.Qn[lf]);
        add_block(out, z0, zh0, b.Dzhat[lf]);
        // flux-continuity rows, this element's side
        add_block(out, yh0, q0, b.Qn[lf].transpose());
        add_block(out, yh0, y0, b.Ey[lf]);
        add_block(out, yh0, yh0, b.Eyhat[lf]);
        add_block(out, zh0, p0, b.Qn[lf].transpose());
        add_block(out, zh0, z0, b.Fz[lf]);
        add_block(out, zh0, zh0, b.Fzhat[lf]);
      } else {
        const int bo = mesh.face_boundary_ordinal[face];
        const int u0 = map.u_offset(bo);
        add_block(out, q0, u0, b.Qn[lf]);
        add_block(out, y0, u0, b.Byhat[lf]);
        // optimality-condition rows
        add_block(out, u0, p0, b.Qn[lf].transpose());
        add_block(out, u0, z0, b.Fz[lf]);
        add_block(out, u0, u0, b.Gu[lf]);
      }
    }
    for (int i = 0; i < S; ++i) {
      rhs[y0 + i] = b.loadF(i);
      rhs[z0 + i] = -b.loadYd(i);
    }
  });

  std::vector<Triplet> triplets;
  size_t total = 0;
  for (const auto& c : chunks) total += c.size();
  triplets.reserve(total);
  for (const auto& c : chunks) triplets.insert(triplets.end(), c.begin(), c.end());

  return {SparseMatrix::from_triplets(map.total, map.total, triplets), std::move(rhs)};
}

struct CondensedSystem::LocalData {
  MatrixXd X1;        // M1^{-1} S1, state-trace columns (3T)
  VectorXd x1f;       // M1^{-1} [0; loadF]
  MatrixXd X2;        // M2^{-1} S2, adjoint-trace columns (3T, zero for boundary faces)
  MatrixXd W2C;       // M2^{-1} [0; Mss]
  VectorXd x2f;       // M2^{-1} [0; -loadYd]
};

namespace {

// Column ids of the element's trace unknowns in skeleton numbering
// (state traces: yhat or u; adjoint traces: zhat or -1 on the boundary).
struct TraceColumns {
  std::array<int, 3> state;
  std::array<int, 3> adjoint;
};

TraceColumns trace_columns(const Mesh& mesh, const DofMap& map, int e) {
  TraceColumns cols{};
  for (int lf = 0; lf < 3; ++lf) {
    const int face = mesh.element_faces[e][lf];
    if (mesh.faces[face].boundary) {
      cols.state[lf] = map.u_offset(mesh.face_boundary_ordinal[face]) - map.interior_total;
      cols.adjoint[lf] = -1;
    } else {
      const int io = mesh.face_interior_ordinal[face];
      cols.state[lf] = map.yhat_offset(io) - map.interior_total;
      cols.adjoint[lf] = map.zhat_offset(io) - map.interior_total;
    }
  }
  return cols;
}

}  // namespace

CondensedSystem assemble_condensed(const Mesh& mesh, const ProblemData& data, int k,
                                   const DiscretizationOptions& opts) {
  refuse_invalid(mesh, data);
  const AsmContext ctx(mesh, data, k, opts);
  const DofMap map = build_dof_map(mesh, k);
  const int F2 = map.flux_block, S = map.scalar_block, T = map.trace_block;
  const int local = F2 + S;

  CondensedSystem sys;
  sys.map = map;
  auto locals = std::make_shared<std::vector<CondensedSystem::LocalData>>(mesh.n_elements());
  sys.state_cols.assign(static_cast<size_t>(mesh.n_elements()) * 3, -1);
  sys.adjoint_cols.assign(static_cast<size_t>(mesh.n_elements()) * 3, -1);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const TraceColumns cols = trace_columns(mesh, map, e);
    for (int lf = 0; lf < 3; ++lf) {
      sys.state_cols[static_cast<size_t>(e) * 3 + lf] = cols.state[lf];
      sys.adjoint_cols[static_cast<size_t>(e) * 3 + lf] = cols.adjoint[lf];
    }
  }

  std::vector<std::vector<Triplet>> chunks(mesh.n_elements());
  std::vector<std::vector<std::pair<int, double>>> rhs_chunks(mesh.n_elements());

  parallel_for(mesh.n_elements(), [&](int e) {
    const ElementBlocks b = compute_element_blocks(ctx, e);
    const TraceColumns cols = trace_columns(mesh, map, e);

    MatrixXd M1 = MatrixXd::Zero(local, local);
    MatrixXd M2 = MatrixXd::Zero(local, local);
    M1.topLeftCorner(F2, F2) = b.Mq;
    M1.topRightCorner(F2, S) = b.Aqy;
    M1.bottomLeftCorner(S, F2) = b.Ayq;
    M1.bottomRightCorner(S, S) = b.Ayy;
    M2.topLeftCorner(F2, F2) = b.Mq;
    M2.topRightCorner(F2, S) = b.Aqy;
    M2.bottomLeftCorner(S, F2) = b.Ayq;
    M2.bottomRightCorner(S, S) = b.Azz;

    MatrixXd S1 = MatrixXd::Zero(local, 3 * T);
    MatrixXd S2 = MatrixXd::Zero(local, 3 * T);
    for (int lf = 0; lf < 3; ++lf) {
      S1.block(0, lf * T, F2, T) = b.Qn[lf];
      S1.block(F2, lf * T, S, T) = b.Byhat[lf];
      if (cols.adjoint[lf] >= 0) {
        S2.block(0, lf * T, F2, T) = b.Qn[lf];
        S2.block(F2, lf * T, S, T) = b.Dzhat[lf];
      }
    }

    Eigen::PartialPivLU<MatrixXd> lu1(M1);
    Eigen::PartialPivLU<MatrixXd> lu2(M2);
    if (lu1.rcond() < 1e-14) throw CondensationError(e, "singular state block");
    if (lu2.rcond() < 1e-14) throw CondensationError(e, "singular adjoint block");

    CondensedSystem::LocalData& ld = (*locals)[e];
    ld.X1 = lu1.solve(S1);
    VectorXd f1 = VectorXd::Zero(local);
    f1.tail(S) = b.loadF;
    ld.x1f = lu1.solve(f1);
    ld.X2 = lu2.solve(S2);
    MatrixXd C = MatrixXd::Zero(local, S);
    C.bottomRows(S) = b.Mss;
    ld.W2C = lu2.solve(C);
    VectorXd f2 = VectorXd::Zero(local);
    f2.tail(S) = -b.loadYd;
    ld.x2f = lu2.solve(f2);

    // y rows of the state solution feed the adjoint right-hand side
    const MatrixXd Y_of_L1 = ld.X1.bottomRows(S);     // y = x1f.y - Y_of_L1 * L1
    const VectorXd y_of_f = ld.x1f.tail(S);

    // [p;z] = W2C*(y_of_f - Y_of_L1*L1) + x2f - X2*L2
    const MatrixXd PZ_of_L1 = ld.W2C * Y_of_L1;
    const VectorXd pz_f = ld.W2C * y_of_f + ld.x2f;

    std::vector<Triplet>& out = chunks[e];
    auto& rout = rhs_chunks[e];
    auto add_block = [&out](int row0, int col0, const MatrixXd& blk) {
      for (int i = 0; i < blk.rows(); ++i)
        for (int j = 0; j < blk.cols(); ++j)
          if (blk(i, j) != 0.0) out.push_back({row0 + i, col0 + j, blk(i, j)});
    };

    for (int lf = 0; lf < 3; ++lf) {
      const int face = mesh.element_faces[e][lf];
      if (!mesh.faces[face].boundary) {
        // state flux-continuity rows: R1 [q;y] + Eyhat yhat = 0
        MatrixXd R1(T, local);
        R1.leftCols(F2) = b.Qn[lf].transpose();
        R1.rightCols(S) = b.Ey[lf];
        const int row0 = cols.state[lf];
        const MatrixXd R1X1 = R1 * ld.X1;
        for (int mf = 0; mf < 3; ++mf) add_block(row0, cols.state[mf], -R1X1.middleCols(mf * T, T));
        add_block(row0, cols.state[lf], b.Eyhat[lf]);
        const VectorXd r1 = -(R1 * ld.x1f);
        for (int i = 0; i < T; ++i) rout.push_back({row0 + i, r1(i)});

        // adjoint flux-continuity rows: R2 [p;z] + Fzhat zhat = 0
        MatrixXd R2(T, local);
        R2.leftCols(F2) = b.Qn[lf].transpose();
        R2.rightCols(S) = b.Fz[lf];
        const int arow0 = cols.adjoint[lf];
        const MatrixXd R2P = R2 * PZ_of_L1;
        for (int mf = 0; mf < 3; ++mf) add_block(arow0, cols.state[mf], -R2P.middleCols(mf * T, T));
        const MatrixXd R2X2 = R2 * ld.X2;
        for (int mf = 0; mf < 3; ++mf)
          if (cols.adjoint[mf] >= 0)
            add_block(arow0, cols.adjoint[mf], -R2X2.middleCols(mf * T, T));
        add_block(arow0, cols.adjoint[lf], b.Fzhat[lf]);
        const VectorXd r2 = -(R2 * pz_f);
        for (int i = 0; i < T; ++i) rout.push_back({arow0 + i, r2(i)});
      } else {
        // optimality rows: Rg [p;z] + Gu u = 0
        MatrixXd Rg(T, local);
        Rg.leftCols(F2) = b.Qn[lf].transpose();
        Rg.rightCols(S) = b.Fz[lf];
        const int row0 = cols.state[lf];
        const MatrixXd RgP = Rg * PZ_of_L1;
        for (int mf = 0; mf < 3; ++mf) add_block(row0, cols.state[mf], -RgP.middleCols(mf * T, T));
        const MatrixXd RgX2 = Rg * ld.X2;
        for (int mf = 0; mf < 3; ++mf)
          if (cols.adjoint[mf] >= 0)
            add_block(row0, cols.adjoint[mf], -RgX2.middleCols(mf * T, T));
        add_block(row0, cols.state[lf], b.Gu[lf]);
        const VectorXd rg = -(Rg * pz_f);
        for (int i = 0; i < T; ++i) rout.push_back({row0 + i, rg(i)});
      }
    }
  });

  std::vector<Triplet> triplets;
  size_t total = 0;
  for (const auto& c : chunks) total += c.size();
  triplets.reserve(total);
  for (const auto& c : chunks) triplets.insert(triplets.end(), c.begin(), c.end());

  sys.skeleton = SparseMatrix::from_triplets(map.skeleton_total, map.skeleton_total, triplets);
  sys.rhs.assign(map.skeleton_total, 0.0);
  for (const auto& c : rhs_chunks)
    for (const auto& [row, v] : c) sys.rhs[row] += v;
  sys.locals = std::move(locals);
  return sys;
}

SolutionFields CondensedSystem::recover_interior(const std::vector<double>& skeleton) const {
  SolutionFields sol;
  sol.map = map;
  sol.x.assign(map.total, 0.0);
  std::copy(skeleton.begin(), skeleton.end(), sol.x.begin() + map.interior_total);

  const int F2 = map.flux_block, S = map.scalar_block, T = map.trace_block;
  // mesh connectivity is implicit in the stored trace column ids; rebuild the
  // gather from the skeleton layout alone
  for (int e = 0; e < map.n_elements; ++e) {
    const CondensedSystem::LocalData& ld = (*locals)[e];
    VectorXd L1 = VectorXd::Zero(3 * T), L2 = VectorXd::Zero(3 * T);
    for (int lf = 0; lf < 3; ++lf) {
      const int sc = state_cols[static_cast<size_t>(e) * 3 + lf];
      const int ac = adjoint_cols[static_cast<size_t>(e) * 3 + lf];
      for (int i = 0; i < T; ++i) L1(lf * T + i) = skeleton[sc + i];
      if (ac >= 0)
        for (int i = 0; i < T; ++i) L2(lf * T + i) = skeleton[ac + i];
    }
    const VectorXd qy = ld.x1f - ld.X1 * L1;
    const VectorXd pz = ld.W2C * qy.tail(S) + ld.x2f - ld.X2 * L2;
    for (int i = 0; i < F2; ++i) sol.x[map.q_offset(e) + i] = qy(i);
    for (int i = 0; i < S; ++i) sol.x[map.y_offset(e) + i] = qy(F2 + i);
    for (int i = 0; i < F2; ++i) sol.x[map.p_offset(e) + i] = pz(i);
    for (int i = 0; i < S; ++i) sol.x[map.z_offset(e) + i] = pz(F2 + i);
  }
  return sol;
}

SolutionFields solve_optimality(const Mesh& mesh, const ProblemData& data, int k,
                                SolveStrategy strategy, const DiscretizationOptions& opts) {
  if (strategy == SolveStrategy::monolithic) {
    LinearSystem sys = assemble_monolithic(mesh, data, k, opts);
    SolutionFields sol;
    sol.map = build_dof_map(mesh, k);
    sol.x = factor_and_solve(sys.A, sys.b);
    return sol;
  }
  CondensedSystem sys = assemble_condensed(mesh, data, k, opts);
  const std::vector<double> skeleton = factor_and_solve(sys.skeleton, sys.rhs);
  return sys.recover_interior(skeleton);
}

ForwardSolution solve_forward(const Mesh& mesh, const ProblemData& data,
                              const std::function<double(Vec2)>& g, int k,
                              const DiscretizationOptions& opts) {
  refuse_invalid(mesh, data);
  const AsmContext ctx(mesh, data, k, opts);
  const DofMap map = build_dof_map(mesh, k);
  const int F2 = map.flux_block, S = map.scalar_block, T = map.trace_block;
  const int local = F2 + S;

  ForwardSolution out;
  out.boundary_trace = TraceField{k + 1, T, {}};
  out.boundary_trace.coeffs.resize(static_cast<size_t>(mesh.n_boundary_faces()) * T);
  for (int bo = 0; bo < mesh.n_boundary_faces(); ++bo) {
    const auto c = project_trace(g, mesh, mesh.boundary_faces[bo], k + 1, ctx.fq.exactness);
    std::copy(c.begin(), c.end(), out.boundary_trace.face(bo));
  }

  struct LocalFwd {
    MatrixXd X1;
    VectorXd x1g;
  };
  std::vector<LocalFwd> locals(mesh.n_elements());
  std::vector<std::vector<Triplet>> chunks(mesh.n_elements());
  std::vector<std::vector<std::pair<int, double>>> rhs_chunks(mesh.n_elements());

  parallel_for(mesh.n_elements(), [&](int e) {
    const ElementBlocks b = compute_element_blocks(ctx, e);
    MatrixXd M1 = MatrixXd::Zero(local, local);
    M1.topLeftCorner(F2, F2) = b.Mq;
    M1.topRightCorner(F2, S) = b.Aqy;
    M1.bottomLeftCorner(S, F2) = b.Ayq;
    M1.bottomRightCorner(S, S) = b.Ayy;

    MatrixXd S1 = MatrixXd::Zero(local, 3 * T);
    VectorXd f1 = VectorXd::Zero(local);
    f1.tail(S) = b.loadF;
    std::array<int, 3> cols{-1, -1, -1};
    for (int lf = 0; lf < 3; ++lf) {
      const int face = mesh.element_faces[e][lf];
      if (mesh.faces[face].boundary) {
        const int bo = mesh.face_boundary_ordinal[face];
        Eigen::Map<const VectorXd> ghat(out.boundary_trace.face(bo), T);
        f1.head(F2) -= b.Qn[lf] * ghat;
        f1.tail(S) -= b.Byhat[lf] * ghat;
      } else {
        const int io = mesh.face_interior_ordinal[face];
        cols[lf] = io * T;
        S1.block(0, lf * T, F2, T) = b.Qn[lf];
        S1.block(F2, lf * T, S, T) = b.Byhat[lf];
      }
    }

    Eigen::PartialPivLU<MatrixXd> lu1(M1);
    if (lu1.rcond() < 1e-14) throw CondensationError(e, "singular state block");
    LocalFwd& ld = locals[e];
    ld.X1 = lu1.solve(S1);
    ld.x1g = lu1.solve(f1);

    std::vector<Triplet>& outt = chunks[e];
    auto& rout = rhs_chunks[e];
    for (int lf = 0; lf < 3; ++lf) {
      if (cols[lf] < 0) continue;
      MatrixXd R1(T, local);
      R1.leftCols(F2) = b.Qn[lf].transpose();
      R1.rightCols(S) = b.Ey[lf];
      const int row0 = cols[lf];
      const MatrixXd R1X1 = R1 * ld.X1;
      for (int mf = 0; mf < 3; ++mf) {
        if (cols[mf] < 0) continue;
        const MatrixXd blk = -R1X1.middleCols(mf * T, T);
        for (int i = 0; i < T; ++i)
          for (int j = 0; j < T; ++j)
            if (blk(i, j) != 0.0) outt.push_back({row0 + i, cols[mf] + j, blk(i, j)});
      }
      for (int i = 0; i < T; ++i)
        for (int j = 0; j < T; ++j)
          if (b.Eyhat[lf](i, j) != 0.0)
            outt.push_back({row0 + i, cols[lf] + j, b.Eyhat[lf](i, j)});
      const VectorXd r1 = -(R1 * ld.x1g);
      for (int i = 0; i < T; ++i) rout.push_back({row0 + i, r1(i)});
    }
  });

  std::vector<Triplet> triplets;
  size_t total = 0;
  for (const auto& c : chunks) total += c.size();
  triplets.reserve(total);
  for (const auto& c : chunks) triplets.insert(triplets.end(), c.begin(), c.end());
  const int skel = mesh.n_interior_faces() * T;
  std::vector<double> rhs(skel, 0.0);
  for (const auto& c : rhs_chunks)
    for (const auto& [row, v] : c) rhs[row] += v;

  const SparseMatrix A = SparseMatrix::from_triplets(skel, skel, triplets);
  out.yhat = factor_and_solve(A, rhs);

  out.q = VectorField{k, F2 / 2, {}};
  out.q.coeffs.resize(static_cast<size_t>(mesh.n_elements()) * F2);
  out.y = ScalarField{k + 1, S, {}};
  out.y.coeffs.resize(static_cast<size_t>(mesh.n_elements()) * S);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    VectorXd L1 = VectorXd::Zero(3 * T);
    for (int lf = 0; lf < 3; ++lf) {
      const int face = mesh.element_faces[e][lf];
      if (mesh.faces[face].boundary) continue;
      const int io = mesh.face_interior_ordinal[face];
      for (int i = 0; i < T; ++i) L1(lf * T + i) = out.yhat[io * T + i];
    }
    const VectorXd qy = locals[e].x1g - locals[e].X1 * L1;
    for (int i = 0; i < F2; ++i) out.q.coeffs[static_cast<size_t>(e) * F2 + i] = qy(i);
    for (int i = 0; i < S; ++i) out.y.coeffs[static_cast<size_t>(e) * S + i] = qy(F2 + i);
  }
  return out;
}

namespace {

// Direct quadrature evaluation of B1 or B2 on a trial/test pair of tuples.
double apply_operator(bool adjoint_side, const DiscreteTuple& trial, const DiscreteTuple& test,
                      const Mesh& mesh, const ProblemData& data, int k,
                      const DiscretizationOptions& opts) {
  const AsmContext ctx(mesh, data, k, opts);
  const DofMap map = build_dof_map(mesh, k);
  const int F = ctx.F, S = ctx.S, T = ctx.T;

  double value = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const ParityTables& t = ctx.par[e % 2];
    const ElementGeometry geo = mesh.element_geometry(e);
    const double* fx = trial.flux.data() + static_cast<size_t>(e) * map.flux_block;
    const double* fy = fx + F;
    const double* sc = trial.scalar.data() + static_cast<size_t>(e) * map.scalar_block;
    const double* gx = test.flux.data() + static_cast<size_t>(e) * map.flux_block;
    const double* gy = gx + F;
    const double* wc = test.scalar.data() + static_cast<size_t>(e) * map.scalar_block;

    for (int q = 0; q < ctx.vol.size(); ++q) {
      const double w = ctx.vol.weights[q] * t.detJ;
      const Vec2 x = geo.map(ctx.vol.points[q]);
      const Vec2 beta = ctx.data.beta.value(x);
      const double div_beta = ctx.data.beta.divergence(x);

      double qvx = 0, qvy = 0, div_q = 0, rvx = 0, rvy = 0, div_r = 0;
      for (int i = 0; i < F; ++i) {
        qvx += fx[i] * t.Vv(q, i);
        qvy += fy[i] * t.Vv(q, i);
        div_q += fx[i] * t.GVx(q, i) + fy[i] * t.GVy(q, i);
        rvx += gx[i] * t.Vv(q, i);
        rvy += gy[i] * t.Vv(q, i);
        div_r += gx[i] * t.GVx(q, i) + gy[i] * t.GVy(q, i);
      }
      double yv = 0, wv = 0, gwx = 0, gwy = 0;
      for (int j = 0; j < S; ++j) {
        yv += sc[j] * t.Wv(q, j);
        wv += wc[j] * t.Wv(q, j);
        gwx += wc[j] * t.GWx(q, j);
        gwy += wc[j] * t.GWy(q, j);
      }
      const double conv = beta.x * gwx + beta.y * gwy;
      if (!adjoint_side) {
        value += w * (qvx * rvx + qvy * rvy - yv * div_r + div_q * wv - yv * conv -
                      div_beta * yv * wv);
      } else {
        value += w * (qvx * rvx + qvy * rvy - yv * div_r + div_q * wv + yv * conv);
      }
    }

    for (int lf = 0; lf < 3; ++lf) {
      const int face = mesh.element_faces[e][lf];
      const bool boundary = mesh.faces[face].boundary;
      const double len = t.face_length[lf];
      const double hinv = ctx.hinv(e % 2, lf);
      const Vec2 n = t.normal[lf];
      const double* th = nullptr;
      const double* mu = nullptr;
      if (!boundary) {
        const int io = mesh.face_interior_ordinal[face];
        th = trial.trace.data() + static_cast<size_t>(io) * T;
        mu = test.trace.data() + static_cast<size_t>(io) * T;
      }
      for (int q = 0; q < ctx.fq.size(); ++q) {
        const double w = ctx.fq.weights[q] * len;
        const Vec2 x = mesh.face_point(face, ctx.fq.points[q]);
        const double bn = ctx.data.beta.value(x).dot(n);
        const double tau = adjoint_side ? ctx.data.tau2 : ctx.data.tau1(bn);

        double yv = 0, wv = 0;
        for (int j = 0; j < S; ++j) {
          yv += sc[j] * t.Wf[lf](q, j);
          wv += wc[j] * t.Wf[lf](q, j);
        }
        if (boundary) {
          value += w * (hinv + tau) * yv * wv;
          continue;
        }
        double qn = 0;
        for (int i = 0; i < F; ++i)
          qn += (fx[i] * n.x + fy[i] * n.y) * t.Vf[lf](q, i);
        double hat = 0, muv = 0;
        for (int m = 0; m < T; ++m) {
          hat += th[m] * ctx.Tb(q, m);
          muv += mu[m] * ctx.Tb(q, m);
        }
        double rn = 0;
        for (int i = 0; i < F; ++i)
          rn += (gx[i] * n.x + gy[i] * n.y) * t.Vf[lf](q, i);

        if (!adjoint_side) {
          value += w * (hat * rn + (hinv + tau) * yv * wv + (bn - tau - hinv) * hat * wv -
                        (qn + bn * hat + (hinv + tau) * (yv - hat)) * muv);
        } else {
          value += w * (hat * rn + (hinv + tau) * yv * wv - (bn + tau + hinv) * hat * wv -
                        (qn - bn * hat + (hinv + tau) * (yv - hat)) * muv);
        }
      }
    }
  }
  return value;
}

}  // namespace

double apply_B1(const DiscreteTuple& trial, const DiscreteTuple& test, const Mesh& mesh,
                const ProblemData& data, int k, const DiscretizationOptions& opts) {
  return apply_operator(false, trial, test, mesh, data, k, opts);
}

double apply_B2(const DiscreteTuple& trial, const DiscreteTuple& test, const Mesh& mesh,
                const ProblemData& data, int k, const DiscretizationOptions& opts) {
  return apply_operator(true, trial, test, mesh, data, k, opts);
}

OptimalityResidual optimality_residual(const SolutionFields& sol, const Mesh& mesh,
                                       const ProblemData& data,
                                       const DiscretizationOptions& opts) {
  const int k = sol.map.degree;
  const AsmContext ctx(mesh, data, k, opts);
  const int F = ctx.F, S = ctx.S, T = ctx.T;

  double abs2 = 0.0, pn2 = 0.0, gu2 = 0.0, sz2 = 0.0;
  for (int bo = 0; bo < mesh.n_boundary_faces(); ++bo) {
    const int face = mesh.boundary_faces[bo];
    const int e = mesh.faces[face].elems[0];
    const ParityTables& t = ctx.par[e % 2];
    int lf = 0;
    while (mesh.element_faces[e][lf] != face) ++lf;
    const double len = t.face_length[lf];
    const double hinv = ctx.hinv(e % 2, lf);
    const Vec2 n = t.normal[lf];
    const auto pc = sol.p(e);
    const auto zc = sol.z(e);
    const auto uc = sol.u(bo);

    VectorXd r = VectorXd::Zero(T), a = VectorXd::Zero(T), b = VectorXd::Zero(T),
             c = VectorXd::Zero(T);
    for (int q = 0; q < ctx.fq.size(); ++q) {
      const double w = ctx.fq.weights[q] * len;
      double pn = 0;
      for (int i = 0; i < F; ++i) pn += (pc[i] * n.x + pc[F + i] * n.y) * t.Vf[lf](q, i);
      double zv = 0;
      for (int j = 0; j < S; ++j) zv += zc[j] * t.Wf[lf](q, j);
      double uv = 0;
      for (int m = 0; m < T; ++m) uv += uc[m] * ctx.Tb(q, m);
      const double sz = (hinv + data.tau2) * zv;
      for (int m = 0; m < T; ++m) {
        const double tm = ctx.Tb(q, m);
        r(m) += w * (pn + data.gamma * uv + sz) * tm;
        a(m) += w * pn * tm;
        b(m) += w * data.gamma * uv * tm;
        c(m) += w * sz * tm;
      }
    }
    abs2 += r.squaredNorm() / len;
    pn2 += a.squaredNorm() / len;
    gu2 += b.squaredNorm() / len;
    sz2 += c.squaredNorm() / len;
  }

  OptimalityResidual out;
  out.absolute = std::sqrt(abs2);
  out.scale = std::sqrt(pn2) + std::sqrt(gu2) + std::sqrt(sz2);
  out.relative = out.scale > 0.0 ? out.absolute / out.scale : out.absolute;
  return out;
}

}  // namespace hdgbc
