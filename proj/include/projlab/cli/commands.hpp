#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "projlab/cli/scenario.hpp"

namespace projlab::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_error = 1,
  exit_config = 2,
  exit_capacity = 3,
  exit_violation = 4,
};

struct CommandOptions {
  std::optional<std::string> out_dir;  // overrides outputs.dir
  bool retain_iterates = false;
  bool quiet = false;
};

// Each command writes report.json (and CSVs where applicable) under the output directory
// and returns an exit code; configuration and capacity errors propagate as exceptions.
int cmd_angles(const Scenario& scenario, const CommandOptions& options, std::ostream& out);
int cmd_constants(const Scenario& scenario, const CommandOptions& options, std::ostream& out);
int cmd_simulate(const Scenario& scenario, const CommandOptions& options, std::ostream& out);
int cmd_sweep(const Scenario& scenario, const CommandOptions& options, std::ostream& out);

/// Full front-end: argument parsing, dispatch, and exception-to-exit-code mapping.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace projlab::cli
