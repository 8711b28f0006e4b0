#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hdgbc/geometry.hpp"
#include "hdgbc/mesh.hpp"

namespace hdgbc {

/// Convection field with caller-supplied divergence (never differentiated numerically).
struct ConvectionField {
  std::function<Vec2(Vec2)> value;
  std::function<double(Vec2)> divergence;

  static ConvectionField constant(Vec2 b) {
    return {[b](Vec2) { return b; }, [](Vec2) { return 0.0; }};
  }
};

/// How tau1 is evaluated on element boundaries. `consistent` is the method's
/// identity tau1 = tau2 + beta.n; `equal_tau2` deliberately breaks it (debug,
/// used to demonstrate that the adjoint identity then fails).
enum class Tau1Mode { consistent, equal_tau2 };

/// Mesh size entering the h^{-1} stabilization: per-face length, or the
/// global maximum element diameter.
enum class HStabilization { per_face, global };

struct ProblemData {
  ConvectionField beta;
  std::function<double(Vec2)> source;         // f
  std::function<double(Vec2)> desired_state;  // y_d
  double gamma = 1.0;
  double tau2 = 1.0;           // piecewise-constant stabilization, one global value
  double side_length = 1.0;    // L
  int degree = 1;              // default polynomial degree k

  Tau1Mode tau1_mode = Tau1Mode::consistent;
  double tau1(double beta_dot_n) const {
    return tau1_mode == Tau1Mode::consistent ? tau2 + beta_dot_n : tau2;
  }
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double worst = 0.0;  // worst offending value for the check
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool ok() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  const CheckResult* find(const std::string& name) const;
};

/// Check gamma > 0, tau2 > 0, div(beta) <= 0 at volume quadrature points,
/// (A1)/(A3), and the implied min(tau1 - beta.n/2) > 0 on every element boundary.
ValidationReport validate(const ProblemData& data, const Mesh& mesh);

/// The square-domain example: f = 0, y_d = (x^2+y^2)^{-1/3}, beta = (1,1),
/// gamma = 1, tau2 = 1, L = 1/8.
ProblemData benchmark_problem();

/// Manufactured smooth solution for forward-solver verification.
struct MmsCase {
  std::function<double(Vec2)> exact_state;     // y
  std::function<Vec2(Vec2)> exact_flux;        // q = -grad y
  std::function<double(Vec2)> boundary_data;   // g = y|_Gamma (identically zero here)
  std::function<double(Vec2)> source;          // f = -lap y + beta . grad y
  Vec2 beta;
  double side_length;
};

/// y = sin(2 pi x/L) sin(2 pi y/L) with constant beta.
MmsCase mms_forward_case(Vec2 beta, double side_length);

}  // namespace hdgbc
