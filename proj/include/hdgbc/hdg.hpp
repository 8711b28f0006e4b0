#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "hdgbc/fields.hpp"
#include "hdgbc/mesh.hpp"
#include "hdgbc/problem.hpp"
#include "hdgbc/sparse.hpp"

namespace hdgbc {

/// Layout of the coupled unknowns (q, y, p, z per element; yhat, zhat per
/// interior face; u per boundary face). Scalar spaces are one degree higher
/// than the flux spaces; traces match the scalar face degree k+1.
struct DofMap {
  int degree = 0;            // k
  int flux_block = 0;        // 2 * dim P^k, per flux variable
  int scalar_block = 0;      // dim P^{k+1}
  int trace_block = 0;       // k + 2, per trace variable per face
  int n_elements = 0;
  int n_interior_faces = 0;
  int n_boundary_faces = 0;
  int elem_block = 0;        // 2*flux_block + 2*scalar_block
  int interior_total = 0;
  int skeleton_total = 0;
  int total = 0;

  int q_offset(int e) const { return e * elem_block; }
  int y_offset(int e) const { return e * elem_block + flux_block; }
  int p_offset(int e) const { return e * elem_block + flux_block + scalar_block; }
  int z_offset(int e) const { return e * elem_block + 2 * flux_block + scalar_block; }
  int yhat_offset(int interior_ordinal) const {
    return interior_total + interior_ordinal * 2 * trace_block;
  }
  int zhat_offset(int interior_ordinal) const {
    return yhat_offset(interior_ordinal) + trace_block;
  }
  int u_offset(int boundary_ordinal) const {
    return interior_total + n_interior_faces * 2 * trace_block + boundary_ordinal * trace_block;
  }
};

DofMap build_dof_map(const Mesh& mesh, int k);

/// Coefficient vectors for (q, p, y, z, yhat, zhat, u) in monolithic layout.
struct SolutionFields {
  DofMap map;
  std::vector<double> x;

  std::span<const double> q(int e) const { return {x.data() + map.q_offset(e), size_t(map.flux_block)}; }
  std::span<const double> y(int e) const { return {x.data() + map.y_offset(e), size_t(map.scalar_block)}; }
  std::span<const double> p(int e) const { return {x.data() + map.p_offset(e), size_t(map.flux_block)}; }
  std::span<const double> z(int e) const { return {x.data() + map.z_offset(e), size_t(map.scalar_block)}; }
  std::span<const double> yhat(int i) const { return {x.data() + map.yhat_offset(i), size_t(map.trace_block)}; }
  std::span<const double> zhat(int i) const { return {x.data() + map.zhat_offset(i), size_t(map.trace_block)}; }
  std::span<const double> u(int b) const { return {x.data() + map.u_offset(b), size_t(map.trace_block)}; }

  ScalarField y_field() const;
  ScalarField z_field() const;
  VectorField q_field() const;
  VectorField p_field() const;
  TraceField u_field() const;
};

/// One (flux, scalar, trace) triple; the trace lives on interior faces only.
struct DiscreteTuple {
  std::vector<double> flux;    // per element, flux_block
  std::vector<double> scalar;  // per element, scalar_block
  std::vector<double> trace;   // per interior face, trace_block
};

DiscreteTuple random_tuple(const DofMap& map, std::mt19937_64& rng);

struct DiscretizationOptions {
  HStabilization h_mode = HStabilization::per_face;
  /// Composite-subdivision levels toward the domain corner at the origin for
  /// integrals of the (possibly singular) desired state; 0 = plain rule.
  int origin_subdivision = 0;
};

struct LinearSystem {
  SparseMatrix A;
  std::vector<double> b;
};

/// Rows follow the test functions (r1, w1, r2, w2, mu1, mu2, mu3) in the same
/// layout as the unknowns; entries are the quadrature values of the seven
/// coupled bilinear forms.
LinearSystem assemble_monolithic(const Mesh& mesh, const ProblemData& data, int k,
                                 const DiscretizationOptions& opts = {});

/// Skeleton system in (yhat, zhat, u) with stored element-local factorizations.
class CondensedSystem {
public:
  SparseMatrix skeleton;
  std::vector<double> rhs;
  DofMap map;

  SolutionFields recover_interior(const std::vector<double>& skeleton_solution) const;

  struct LocalData;
  std::shared_ptr<const std::vector<LocalData>> locals;
  // skeleton column of each element's trace unknowns (3 per element;
  // adjoint column is -1 alongside boundary faces)
  std::vector<int> state_cols;
  std::vector<int> adjoint_cols;
};

CondensedSystem assemble_condensed(const Mesh& mesh, const ProblemData& data, int k,
                                   const DiscretizationOptions& opts = {});

enum class SolveStrategy { monolithic, condensed };

/// One-shot solve of the coupled optimality system.
SolutionFields solve_optimality(const Mesh& mesh, const ProblemData& data, int k,
                                SolveStrategy strategy = SolveStrategy::condensed,
                                const DiscretizationOptions& opts = {});

struct ForwardSolution {
  VectorField q;
  ScalarField y;
  std::vector<double> yhat;  // interior-face traces, trace_block per face
  TraceField boundary_trace; // P_M g
};

/// Convection-diffusion solve with Dirichlet data g (projected onto the
/// boundary trace space).
ForwardSolution solve_forward(const Mesh& mesh, const ProblemData& data,
                              const std::function<double(Vec2)>& g, int k,
                              const DiscretizationOptions& opts = {});

/// Direct quadrature evaluation of the first HDG operator on a trial/test pair.
double apply_B1(const DiscreteTuple& trial, const DiscreteTuple& test, const Mesh& mesh,
                const ProblemData& data, int k, const DiscretizationOptions& opts = {});
/// Same for the adjoint-side operator.
double apply_B2(const DiscreteTuple& trial, const DiscreteTuple& test, const Mesh& mesh,
                const ProblemData& data, int k, const DiscretizationOptions& opts = {});

struct OptimalityResidual {
  double absolute = 0.0;  // L2(Gamma) norm of the trace-space residual
  double scale = 0.0;     // norm of the individual terms, for relative reporting
  double relative = 0.0;
};

/// Residual of the boundary optimality condition <p.n + gamma u + (h^{-1}+tau2) z, mu>.
OptimalityResidual optimality_residual(const SolutionFields& sol, const Mesh& mesh,
                                       const ProblemData& data,
                                       const DiscretizationOptions& opts = {});

}  // namespace hdgbc
