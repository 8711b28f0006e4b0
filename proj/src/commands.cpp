#include "hdgbc/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "hdgbc/analysis.hpp"
#include "hdgbc/errors.hpp"
#include "hdgbc/identities.hpp"
#include "hdgbc/study_config.hpp"

namespace hdgbc {

namespace {

void print_table(std::ostream& out, const RateTable& table) {
  out << std::left << std::setw(6) << "n" << std::setw(13) << "h" << std::setw(13) << "err_q"
      << std::setw(7) << "ord" << std::setw(13) << "err_p" << std::setw(7) << "ord"
      << std::setw(13) << "err_y" << std::setw(7) << "ord" << std::setw(13) << "err_z"
      << std::setw(7) << "ord" << std::setw(13) << "err_u" << std::setw(7) << "ord"
      << std::setw(13) << "J" << "\n";
  char cell[32];
  for (const RateRow& r : table.rows) {
    auto err_cell = [&](double v) {
      std::snprintf(cell, sizeof(cell), "%-13.3e", v);
      out << cell;
    };
    auto ord_cell = [&](double v) {
      if (r.has_rates)
        std::snprintf(cell, sizeof(cell), "%-7.2f", v);
      else
        std::snprintf(cell, sizeof(cell), "%-7s", "-");
      out << cell;
    };
    std::snprintf(cell, sizeof(cell), "%-6d", r.n);
    out << cell;
    err_cell(r.h);
    err_cell(r.err_q);
    ord_cell(r.rate_q);
    err_cell(r.err_p);
    ord_cell(r.rate_p);
    err_cell(r.err_y);
    ord_cell(r.rate_y);
    err_cell(r.err_z);
    ord_cell(r.rate_z);
    err_cell(r.err_u);
    ord_cell(r.rate_u);
    err_cell(r.cost);
    out << "\n";
  }
}

int write_outputs(const RateTable& table, const std::string& output_dir, const std::string& stem,
                  bool emit_plot, std::ostream& out, std::ostream& err) {
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  const std::string csv_path = output_dir + "/" + stem + ".csv";
  std::ofstream csv(csv_path);
  if (!csv) {
    err << "cannot write " << csv_path << "\n";
    return kExitConfigError;
  }
  write_csv(csv, table);
  out << "wrote " << csv_path << "\n";
  if (emit_plot) {
    const std::string plot_path = output_dir + "/" + stem + ".gp";
    std::ofstream plot(plot_path);
    write_plot_script(plot, stem + ".csv");
    out << "wrote " << plot_path << "\n";
  }
  return kExitOk;
}

}  // namespace

int cmd_run_study(const std::string& config_path, std::ostream& out, std::ostream& err) {
  StudyConfig config;
  try {
    config = load_study_config(config_path);
    validate_study_config(config);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  try {
    const RateTable table = run_study(config);
    print_table(out, table);
    return write_outputs(table, config.output_dir, "rates", config.emit_plot, out, err);
  } catch (const SingularSystemError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumericalFailure;
  } catch (const CondensationError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumericalFailure;
  } catch (const std::invalid_argument& e) {
    // problem data rejected by validation: a config problem, not a numerical one
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
}

int cmd_verify_identities(int k, int n, unsigned long long seed, bool break_a2,
                          std::ostream& out) {
  const Mesh mesh = build_structured(0.125, n);
  ProblemData data = benchmark_problem();
  data.degree = k;
  if (break_a2) data.tau1_mode = Tau1Mode::equal_tau2;

  const IdentityReport report = run_identity_checks(mesh, data, k, seed);
  out << "energy identity (B1): worst relative deviation " << report.worst_energy_b1 << "\n"
      << "energy identity (B2): worst relative deviation " << report.worst_energy_b2 << "\n"
      << "adjoint identity:     worst relative deviation " << report.worst_adjoint << "\n"
      << "assembly consistency: worst relative deviation " << report.worst_consistency << "\n";
  if (!report.pass()) {
    out << "FAIL\n";
    return kExitIdentityFailure;
  }
  out << "PASS\n";
  return kExitOk;
}

int cmd_run_mms(int k, const std::vector<int>& levels, const std::string& output_dir,
                std::ostream& out, std::ostream& err) {
  StudyConfig config;
  config.problem = StudyProblem::mms;
  config.k = k;
  config.study_levels = levels;
  config.output_dir = output_dir;
  try {
    validate_study_config(config);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  try {
    const RateTable table = run_study(config);
    print_table(out, table);
    return write_outputs(table, config.output_dir, "mms", config.emit_plot, out, err);
  } catch (const SingularSystemError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumericalFailure;
  } catch (const CondensationError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumericalFailure;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
}

int cmd_dump_mesh(double side_length, int n, const std::string& output_path, std::ostream& err) {
  try {
    const Mesh mesh = build_structured(side_length, n);
    std::ofstream out(output_path);
    if (!out) {
      err << "cannot write " << output_path << "\n";
      return kExitConfigError;
    }
    write_mesh(out, mesh);
    return kExitOk;
  } catch (const std::invalid_argument& e) {
    err << "invalid mesh parameters: " << e.what() << "\n";
    return kExitConfigError;
  }
}

}  // namespace hdgbc
