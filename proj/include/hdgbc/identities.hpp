#pragma once

#include "hdgbc/hdg.hpp"
#include "hdgbc/mesh.hpp"
#include "hdgbc/problem.hpp"

namespace hdgbc {

/// Quadrature evaluation of the energy-identity right-hand side
///   (v,v) - 1/2 (div(beta) w, w)
///   + <(h^{-1} + tau -/+ beta.n/2)(w - mu), w - mu>  on interior boundaries
///   + <(h^{-1} + tau -/+ beta.n/2) w, w>             on the boundary,
/// with the tau1/- combination for the first operator and tau2/+ for the
/// second. Written against the basis directly; shares no code with apply_B1/B2.
double energy_identity_rhs(bool adjoint_side, const DiscreteTuple& t, const Mesh& mesh,
                           const ProblemData& data, int k,
                           const DiscretizationOptions& opts = {});

/// Boundary/optimality couplings of the monolithic system not covered by the
/// two operators: <u, r1.n> + <(beta.n - tau1 - h^{-1}) u, w1>
/// + <p.n + gamma u + (h^{-1}+tau2) z, mu3> - (y, w2).
double coupling_terms(const std::vector<double>& unknowns, const std::vector<double>& tests,
                      const Mesh& mesh, const ProblemData& data, int k,
                      const DiscretizationOptions& opts = {});

struct IdentityReport {
  double worst_energy_b1 = 0.0;
  double worst_energy_b2 = 0.0;
  double worst_adjoint = 0.0;
  double worst_consistency = 0.0;
  int energy_tuples = 0;
  int consistency_tuples = 0;

  bool pass() const {
    return worst_energy_b1 <= 1e-10 && worst_energy_b2 <= 1e-10 && worst_adjoint <= 1e-10 &&
           worst_consistency <= 1e-11;
  }
};

/// Energy identities, adjoint identity, and assembly/operator consistency on
/// random discrete tuples.
IdentityReport run_identity_checks(const Mesh& mesh, const ProblemData& data, int k,
                                   unsigned long long seed, int energy_tuples = 100,
                                   int consistency_tuples = 50,
                                   const DiscretizationOptions& opts = {});

}  // namespace hdgbc
