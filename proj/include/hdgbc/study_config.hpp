#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hdgbc/geometry.hpp"
#include "hdgbc/hdg.hpp"

namespace hdgbc {

enum class StudyProblem { benchmark, mms, zero };

/// Flat key = value configuration for a convergence study.
struct StudyConfig {
  StudyProblem problem = StudyProblem::benchmark;
  int k = 1;
  std::vector<int> study_levels = {2, 4, 8, 16};
  int reference_n = 128;
  SolveStrategy strategy = SolveStrategy::condensed;
  HStabilization h_mode = HStabilization::per_face;
  double tau2 = 1.0;
  Vec2 beta{1.0, 1.0};
  double gamma = 1.0;
  double domain_length = 0.125;
  std::string output_dir = ".";
  bool origin_subdivision = false;
  bool emit_plot = true;
};

/// Parse `key = value` lines ('#' comments, lists comma-separated).
/// Throws ConfigError with the offending line number.
StudyConfig parse_study_config(std::istream& in);
StudyConfig load_study_config(const std::string& path);

/// Enforce the config invariants (levels strictly doubling, reference_n at
/// least 8x the finest study level for the benchmark problem, positive data).
void validate_study_config(const StudyConfig& config);

}  // namespace hdgbc
