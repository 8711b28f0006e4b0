#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "hdgbc/analysis.hpp"
#include "hdgbc/commands.hpp"
#include "hdgbc/identities.hpp"
#include "hdgbc/study_config.hpp"

namespace py = pybind11;
using namespace hdgbc;

namespace {

struct PySolution {
  double cost = 0.0;
  double residual_absolute = 0.0;
  double residual_relative = 0.0;
  double norm_q = 0.0, norm_p = 0.0, norm_y = 0.0, norm_z = 0.0, norm_u = 0.0;
};

PySolution py_solve_optimality(const Mesh& mesh, const ProblemData& data, int k,
                               const std::string& strategy) {
  const SolveStrategy s =
      strategy == "monolithic" ? SolveStrategy::monolithic : SolveStrategy::condensed;
  const SolutionFields sol = solve_optimality(mesh, data, k, s);
  PySolution out;
  out.cost = cost_functional(sol, mesh, data);
  const OptimalityResidual r = optimality_residual(sol, mesh, data);
  out.residual_absolute = r.absolute;
  out.residual_relative = r.relative;
  out.norm_q = l2_norm_volume(sol.q_field(), mesh);
  out.norm_p = l2_norm_volume(sol.p_field(), mesh);
  out.norm_y = l2_norm_volume(sol.y_field(), mesh);
  out.norm_z = l2_norm_volume(sol.z_field(), mesh);
  out.norm_u = l2_norm_boundary(sol.u_field(), mesh);
  return out;
}

py::dict py_solve_forward_mms(int k, int n, double length, std::pair<double, double> beta) {
  const Mesh mesh = build_structured(length, n);
  const MmsCase mms = mms_forward_case({beta.first, beta.second}, length);
  ProblemData data;
  data.beta = ConvectionField::constant({beta.first, beta.second});
  data.side_length = length;
  data.degree = k;
  data.source = mms.source;
  data.desired_state = [](Vec2) { return 0.0; };
  const ForwardSolution sol = solve_forward(mesh, data, mms.boundary_data, k);
  py::dict out;
  out["h"] = mesh.h_max();
  out["err_y"] = l2_error_volume(sol.y, mesh, mms.exact_state);
  out["err_q"] = l2_error_volume(sol.q, mesh, mms.exact_flux);
  return out;
}

py::dict py_verify_identities(int k, int n, unsigned long long seed, bool break_a2) {
  const Mesh mesh = build_structured(0.125, n);
  ProblemData data = benchmark_problem();
  data.degree = k;
  if (break_a2) data.tau1_mode = Tau1Mode::equal_tau2;
  const IdentityReport r = run_identity_checks(mesh, data, k, seed);
  py::dict out;
  out["energy_b1"] = r.worst_energy_b1;
  out["energy_b2"] = r.worst_energy_b2;
  out["adjoint"] = r.worst_adjoint;
  out["consistency"] = r.worst_consistency;
  out["ok"] = r.pass();
  return out;
}

py::list py_run_study(const std::string& config_path) {
  const StudyConfig config = load_study_config(config_path);
  const RateTable table = run_study(config);
  py::list rows;
  for (const RateRow& r : table.rows) {
    py::dict row;
    row["level"] = r.level;
    row["n"] = r.n;
    row["h"] = r.h;
    row["err_q"] = r.err_q;
    row["err_p"] = r.err_p;
    row["err_y"] = r.err_y;
    row["err_z"] = r.err_z;
    row["err_u"] = r.err_u;
    row["J"] = r.cost;
    if (r.has_rates) {
      row["rate_q"] = r.rate_q;
      row["rate_p"] = r.rate_p;
      row["rate_y"] = r.rate_y;
      row["rate_z"] = r.rate_z;
      row["rate_u"] = r.rate_u;
    }
    rows.append(row);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "HDG discretization of Dirichlet boundary control for convection-diffusion PDEs";

  py::class_<Mesh>(m, "Mesh")
      .def_property_readonly("n_vertices", &Mesh::n_vertices)
      .def_property_readonly("n_elements", &Mesh::n_elements)
      .def_property_readonly("n_faces", &Mesh::n_faces)
      .def_property_readonly("n_interior_faces", &Mesh::n_interior_faces)
      .def_property_readonly("n_boundary_faces", &Mesh::n_boundary_faces)
      .def_property_readonly("h_max", &Mesh::h_max)
      .def_property_readonly("h_min", &Mesh::h_min)
      .def_readonly("side_length", &Mesh::side_length)
      .def_readonly("subdivisions", &Mesh::subdivisions)
      .def("dump", [](const Mesh& mesh) {
        std::ostringstream out;
        write_mesh(out, mesh);
        return out.str();
      });

  py::class_<ProblemData>(m, "ProblemData")
      .def_readonly("gamma", &ProblemData::gamma)
      .def_readonly("tau2", &ProblemData::tau2)
      .def_readonly("side_length", &ProblemData::side_length)
      .def_readonly("degree", &ProblemData::degree)
      .def("y_d", [](const ProblemData& d, double x, double y) {
        return d.desired_state({x, y});
      })
      .def("f", [](const ProblemData& d, double x, double y) { return d.source({x, y}); });

  py::class_<PySolution>(m, "Solution")
      .def_readonly("cost", &PySolution::cost)
      .def_readonly("residual_absolute", &PySolution::residual_absolute)
      .def_readonly("residual_relative", &PySolution::residual_relative)
      .def_readonly("norm_q", &PySolution::norm_q)
      .def_readonly("norm_p", &PySolution::norm_p)
      .def_readonly("norm_y", &PySolution::norm_y)
      .def_readonly("norm_z", &PySolution::norm_z)
      .def_readonly("norm_u", &PySolution::norm_u);

  m.def("build_structured", &build_structured, py::arg("side_length"), py::arg("subdivisions"));
  m.def("benchmark_problem", &benchmark_problem);
  m.def(
      "make_problem",
      [](std::pair<double, double> beta, double gamma, double tau2, double length, int degree) {
        ProblemData data;
        data.beta = ConvectionField::constant({beta.first, beta.second});
        data.gamma = gamma;
        data.tau2 = tau2;
        data.side_length = length;
        data.degree = degree;
        data.source = [](Vec2) { return 0.0; };
        data.desired_state = [](Vec2) { return 0.0; };
        return data;
      },
      py::arg("beta") = std::pair<double, double>{1.0, 1.0}, py::arg("gamma") = 1.0,
      py::arg("tau2") = 1.0, py::arg("length") = 0.125, py::arg("degree") = 1);
  m.def("validate", [](const ProblemData& data, const Mesh& mesh) {
    py::list checks;
    for (const CheckResult& c : validate(data, mesh).checks)
      checks.append(py::make_tuple(c.name, c.pass, c.worst));
    return checks;
  });
  m.def("dof_totals", [](const Mesh& mesh, int k) {
    const DofMap map = build_dof_map(mesh, k);
    py::dict out;
    out["interior"] = map.interior_total;
    out["skeleton"] = map.skeleton_total;
    out["total"] = map.total;
    return out;
  });
  m.def("solve_optimality", &py_solve_optimality, py::arg("mesh"), py::arg("data"), py::arg("k"),
        py::arg("strategy") = "condensed");
  m.def("solve_forward_mms", &py_solve_forward_mms, py::arg("k"), py::arg("n"),
        py::arg("length") = 0.125, py::arg("beta") = std::pair<double, double>{1.0, 1.0});
  m.def("verify_identities", &py_verify_identities, py::arg("k"), py::arg("n"),
        py::arg("seed") = 42, py::arg("break_a2") = false);
  m.def("run_study", &py_run_study, py::arg("config_path"));

  m.attr("__version__") = "0.1.0";
}
