#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "polyflow/cli/run_config.hpp"
#include "polyflow/error.hpp"

namespace polyflow::cli {

struct RunOptions {
  /// Overrides output.report when non-empty.
  std::string report_out;
  /// Concurrent independent runs (sweeps, refinement levels).
  int jobs = 1;
};

const std::vector<std::string>& subcommands();

/// Runs one subcommand. Results go to `out`, failures are described on `err`; the
/// return value is the process exit code (0 on success).
ExitCode dispatch(const std::string& command, const RunConfig& config, const RunOptions& options,
                  std::ostream& out, std::ostream& err);

}  // namespace polyflow::cli
