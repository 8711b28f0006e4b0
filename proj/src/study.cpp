#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hdgbc/analysis.hpp"
#include "hdgbc/errors.hpp"
#include "hdgbc/study_config.hpp"

namespace hdgbc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(trim(item));
  return items;
}

double parse_number(const std::string& s, int line) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw ConfigError("trailing characters in number '" + s + "'", line);
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    throw ConfigError("expected a number, got '" + s + "'", line);
  }
}

int parse_int(const std::string& s, int line) {
  const double v = parse_number(s, line);
  const int i = static_cast<int>(v);
  if (double(i) != v) throw ConfigError("expected an integer, got '" + s + "'", line);
  return i;
}

bool parse_bool(const std::string& s, int line) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("expected a boolean, got '" + s + "'", line);
}

}  // namespace

StudyConfig parse_study_config(std::istream& in) {
  StudyConfig config;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string text = trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError("expected 'key = value'", line);

    if (key == "problem") {
      if (value == "benchmark") config.problem = StudyProblem::benchmark;
      else if (value == "mms") config.problem = StudyProblem::mms;
      else if (value == "zero") config.problem = StudyProblem::zero;
      else throw ConfigError("problem must be benchmark | mms | zero", line);
    } else if (key == "k") {
      config.k = parse_int(value, line);
    } else if (key == "study_levels") {
      config.study_levels.clear();
      for (const std::string& item : split_list(value))
        config.study_levels.push_back(parse_int(item, line));
      if (config.study_levels.empty()) throw ConfigError("study_levels is empty", line);
    } else if (key == "reference_n") {
      config.reference_n = parse_int(value, line);
    } else if (key == "strategy") {
      if (value == "monolithic") config.strategy = SolveStrategy::monolithic;
      else if (value == "condensed") config.strategy = SolveStrategy::condensed;
      else throw ConfigError("strategy must be monolithic | condensed", line);
    } else if (key == "h_mode") {
      if (value == "local") config.h_mode = HStabilization::per_face;
      else if (value == "global") config.h_mode = HStabilization::global;
      else throw ConfigError("h_mode must be local | global", line);
    } else if (key == "tau2") {
      config.tau2 = parse_number(value, line);
    } else if (key == "beta") {
      const auto items = split_list(value);
      if (items.size() != 2) throw ConfigError("beta needs two comma-separated numbers", line);
      config.beta = {parse_number(items[0], line), parse_number(items[1], line)};
    } else if (key == "gamma") {
      config.gamma = parse_number(value, line);
    } else if (key == "domain_length") {
      config.domain_length = parse_number(value, line);
    } else if (key == "output_dir") {
      config.output_dir = value;
    } else if (key == "origin_subdivision") {
      config.origin_subdivision = parse_bool(value, line);
    } else if (key == "emit_plot") {
      config.emit_plot = parse_bool(value, line);
    } else {
      throw ConfigError("unknown key '" + key + "'", line);
    }
  }
  return config;
}

StudyConfig load_study_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_study_config(in);
}

void validate_study_config(const StudyConfig& config) {
  if (config.k < 0 || config.k > 2) throw ConfigError("k must be in {0,1,2}");
  if (config.study_levels.empty()) throw ConfigError("study_levels must not be empty");
  for (size_t i = 0; i < config.study_levels.size(); ++i) {
    if (config.study_levels[i] < 1) throw ConfigError("study levels must be positive");
    if (i > 0 && config.study_levels[i] != 2 * config.study_levels[i - 1])
      throw ConfigError("study levels must double: each level must be twice the previous");
  }
  if (!(config.tau2 > 0.0)) throw ConfigError("tau2 must be positive");
  if (!(config.gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (!(config.domain_length > 0.0)) throw ConfigError("domain_length must be positive");

  if (config.problem != StudyProblem::mms) {
    const int finest = config.study_levels.back();
    if (config.problem == StudyProblem::benchmark && config.reference_n < 8 * finest)
      throw ConfigError("reference_n must be at least 8x the finest study level");
    if (config.reference_n < 4 * finest)
      throw ConfigError("reference_n must be at least 4x the finest study level");
    int n = finest;
    while (n < config.reference_n) n *= 2;
    if (n != config.reference_n)
      throw ConfigError("reference_n must be a power-of-two multiple of the study levels");
  }
}

namespace {

ProblemData config_problem(const StudyConfig& config) {
  ProblemData data;
  data.beta = ConvectionField::constant(config.beta);
  data.gamma = config.gamma;
  data.tau2 = config.tau2;
  data.side_length = config.domain_length;
  data.degree = config.k;
  switch (config.problem) {
    case StudyProblem::benchmark:
      data.source = [](Vec2) { return 0.0; };
      data.desired_state = [](Vec2 p) {
        return std::pow(p.x * p.x + p.y * p.y, -1.0 / 3.0);
      };
      break;
    case StudyProblem::zero:
    case StudyProblem::mms:
      data.source = [](Vec2) { return 0.0; };
      data.desired_state = [](Vec2) { return 0.0; };
      break;
  }
  return data;
}

RateTable run_mms_study(const StudyConfig& config) {
  const MmsCase mms = mms_forward_case(config.beta, config.domain_length);
  DiscretizationOptions opts;
  opts.h_mode = config.h_mode;

  ProblemData data;
  data.beta = ConvectionField::constant(config.beta);
  data.gamma = config.gamma;
  data.tau2 = config.tau2;
  data.side_length = config.domain_length;
  data.degree = config.k;
  data.source = mms.source;
  data.desired_state = [](Vec2) { return 0.0; };

  RateTable table;
  for (int n : config.study_levels) {
    const Mesh mesh = build_structured(config.domain_length, n);
    const ForwardSolution sol = solve_forward(mesh, data, mms.boundary_data, config.k);
    RateRow row;
    row.n = n;
    row.h = mesh.h_max();
    row.err_y = l2_error_volume(sol.y, mesh, mms.exact_state);
    row.err_q = l2_error_volume(sol.q, mesh, mms.exact_flux);
    table.rows.push_back(row);
  }
  table.compute_rates();
  // only q and y are produced by the forward study
  for (RateRow& r : table.rows) r.rate_p = r.rate_z = r.rate_u = 0.0;
  return table;
}

}  // namespace

RateTable run_study(const StudyConfig& config) {
  validate_study_config(config);
  if (config.problem == StudyProblem::mms) return run_mms_study(config);

  const ProblemData data = config_problem(config);
  DiscretizationOptions opts;
  opts.h_mode = config.h_mode;
  opts.origin_subdivision = config.origin_subdivision ? 1 : 0;

  const int n0 = config.study_levels.front();
  int n_levels = 1;
  while (n0 << (n_levels - 1) < config.reference_n) ++n_levels;
  const MeshHierarchy hierarchy = build_hierarchy(config.domain_length, n0, n_levels);
  const int ref_level = hierarchy.level_of(config.reference_n);

  struct LevelFields {
    VectorField q, p;
    ScalarField y, z;
    TraceField u;
  };
  auto extract = [](const SolutionFields& sol) {
    return LevelFields{sol.q_field(), sol.p_field(), sol.y_field(), sol.z_field(), sol.u_field()};
  };

  const SolutionFields ref_sol =
      solve_optimality(hierarchy.levels[ref_level], data, config.k, config.strategy, opts);
  const LevelFields ref = extract(ref_sol);

  RateTable table;
  for (int n : config.study_levels) {
    const int level = hierarchy.level_of(n);
    const Mesh& mesh = hierarchy.levels[level];
    const SolutionFields sol = solve_optimality(mesh, data, config.k, config.strategy, opts);
    const LevelFields f = extract(sol);

    RateRow row;
    row.n = n;
    row.h = mesh.h_max();
    row.err_q = l2_error_volume(f.q, level, ref.q, ref_level, hierarchy);
    row.err_p = l2_error_volume(f.p, level, ref.p, ref_level, hierarchy);
    row.err_y = l2_error_volume(f.y, level, ref.y, ref_level, hierarchy);
    row.err_z = l2_error_volume(f.z, level, ref.z, ref_level, hierarchy);
    row.err_u = l2_error_boundary(f.u, level, ref.u, ref_level, hierarchy);
    row.cost = cost_functional(sol, mesh, data, opts);
    table.rows.push_back(row);
  }
  table.compute_rates();
  return table;
}

}  // namespace hdgbc
