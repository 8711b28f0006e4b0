#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hdgbc/fields.hpp"
#include "hdgbc/hdg.hpp"
#include "hdgbc/mesh.hpp"
#include "hdgbc/problem.hpp"
#include "hdgbc/study_config.hpp"

namespace hdgbc {

/// Convergence rates guaranteed by the theory: s_x = min{r_x, k+1} for fluxes
/// and min{r_x, k+2} for scalars, and the control rate r = min{r_d, r_Omega}.
struct ExpectedRates {
  int k = 1;
  double s_q = 0, s_y = 0, s_p = 0, s_z = 0;
  double control_rate = 0;
  double r_d = 0, r_omega = 0, omega = 0, t_star = 0;
  bool k0_regime = false;

  static ExpectedRates from_regularity(int k, double r_q, double r_y, double r_p, double r_z);
  /// Rates for the square-domain example: omega = pi/2, y_d in H^{1/3-eps}.
  static ExpectedRates benchmark_case(int k);
};

struct RateRow {
  int level = 0;  // 1-based
  int n = 0;
  double h = 0;
  // column order matches the CSV schema: q, p, y, z, u
  double err_q = 0, err_p = 0, err_y = 0, err_z = 0, err_u = 0;
  double rate_q = 0, rate_p = 0, rate_y = 0, rate_z = 0, rate_u = 0;
  bool has_rates = false;  // false on the first level
  double cost = 0;         // J(u_h)
};

struct RateTable {
  std::vector<RateRow> rows;
  void compute_rates();  // observed order log2(e_{2h}/e_h) from level 2 on
};

/// L2(Omega) error of a piecewise polynomial field against an exact function.
double l2_error_volume(const ScalarField& field, const Mesh& mesh,
                       const std::function<double(Vec2)>& exact, int quadrature_degree = -1);
double l2_error_volume(const VectorField& field, const Mesh& mesh,
                       const std::function<Vec2(Vec2)>& exact, int quadrature_degree = -1);

/// L2(Omega) error between fields on two nested levels of a hierarchy,
/// integrated on the finer mesh through the parent maps.
double l2_error_volume(const ScalarField& coarse, int coarse_level, const ScalarField& fine,
                       int fine_level, const MeshHierarchy& hierarchy,
                       int quadrature_degree = -1);
double l2_error_volume(const VectorField& coarse, int coarse_level, const VectorField& fine,
                       int fine_level, const MeshHierarchy& hierarchy,
                       int quadrature_degree = -1);

/// L2(Gamma) analogues on the boundary skeleton.
double l2_error_boundary(const TraceField& trace, const Mesh& mesh,
                         const std::function<double(Vec2)>& exact, int quadrature_degree = -1);
double l2_error_boundary(const TraceField& coarse, int coarse_level, const TraceField& fine,
                         int fine_level, const MeshHierarchy& hierarchy,
                         int quadrature_degree = -1);

double l2_norm_volume(const ScalarField& field, const Mesh& mesh);
double l2_norm_volume(const VectorField& field, const Mesh& mesh);
double l2_norm_boundary(const TraceField& trace, const Mesh& mesh);

/// J(u_h) = 1/2 ||y_h - y_d||^2 + gamma/2 ||u_h||^2_Gamma.
double cost_functional(const SolutionFields& sol, const Mesh& mesh, const ProblemData& data,
                       const DiscretizationOptions& opts = {});

/// Solve on every study level plus the reference level and tabulate errors,
/// observed orders, and cost values.
RateTable run_study(const StudyConfig& config);

/// CSV schema: level,n,h,err_q,rate_q,err_p,rate_p,err_y,rate_y,err_z,rate_z,err_u,rate_u,J
void write_csv(std::ostream& out, const RateTable& table);

/// gnuplot script plotting the error columns of `csv_name` against h.
void write_plot_script(std::ostream& out, const std::string& csv_name);

}  // namespace hdgbc
