#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bqnet::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_domain = 1,
  exit_validation = 2,
  exit_convergence = 3,
  exit_missing_file = 66,
};

/// Dispatches `bqnet <subcommand> ...`; args excludes the program name.
/// Results go to files under --out, or to `out` when no prefix is given;
/// diagnostics go to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bqnet::cli
