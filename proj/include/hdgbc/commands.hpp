#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hdgbc {

// Exit codes shared by the CLI: 0 success, 1 identity failure, 2 config error,
// 3 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIdentityFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalFailure = 3;

int cmd_run_study(const std::string& config_path, std::ostream& out, std::ostream& err);

int cmd_verify_identities(int k, int n, unsigned long long seed, bool break_a2, std::ostream& out);

int cmd_run_mms(int k, const std::vector<int>& levels, const std::string& output_dir,
                std::ostream& out, std::ostream& err);

int cmd_dump_mesh(double side_length, int n, const std::string& output_path, std::ostream& err);

}  // namespace hdgbc
