#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "hdgbc/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"HDG solver for Dirichlet boundary control of convection-diffusion equations"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run_study = app.add_subcommand("run-study", "run a convergence study from a config file");
  run_study->add_option("config", config_path, "path to a key = value config file")->required();

  int k = 1, n = 4;
  unsigned long long seed = 42;
  bool break_a2 = false;
  auto* verify = app.add_subcommand("verify-identities",
                                    "check the operator energy/adjoint identities and "
                                    "assembly consistency on random tuples");
  verify->add_option("--k", k, "polynomial degree (0, 1, or 2)");
  verify->add_option("--n", n, "mesh subdivisions");
  verify->add_option("--seed", seed, "random seed");
  verify->add_flag("--break-a2", break_a2,
                   "debug: set tau1 = tau2, which must break the adjoint identity");

  int mms_k = 1;
  std::vector<int> levels = {8, 16, 32, 64};
  std::string output_dir = ".";
  auto* mms = app.add_subcommand("run-mms", "forward manufactured-solution convergence study");
  mms->add_option("--k", mms_k, "polynomial degree (0, 1, or 2)");
  mms->add_option("--levels", levels, "comma-separated mesh subdivisions")->delimiter(',');
  mms->add_option("--output-dir", output_dir, "directory for the CSV report");

  double side_length = 0.125;
  int dump_n = 4;
  std::string dump_path = "mesh.txt";
  auto* dump = app.add_subcommand("dump-mesh", "write a structured mesh as plain text");
  dump->add_option("--length", side_length, "domain side length");
  dump->add_option("--n", dump_n, "mesh subdivisions");
  dump->add_option("--output", dump_path, "output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return hdgbc::kExitConfigError;
  }

  if (run_study->parsed()) return hdgbc::cmd_run_study(config_path, std::cout, std::cerr);
  if (verify->parsed()) return hdgbc::cmd_verify_identities(k, n, seed, break_a2, std::cout);
  if (mms->parsed()) return hdgbc::cmd_run_mms(mms_k, levels, output_dir, std::cout, std::cerr);
  if (dump->parsed()) return hdgbc::cmd_dump_mesh(side_length, dump_n, dump_path, std::cerr);
  return hdgbc::kExitConfigError;
}
