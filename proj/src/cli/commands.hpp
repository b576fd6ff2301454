#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cli/config.hpp"

namespace fracflow::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitCheckFailed = 1,
    kExitConfigError = 2,
    kExitNumericalFailure = 3,
};

/// Exit code for a library error.
int exit_code_for(ErrorKind kind);

/// Worker count from FRACFLOW_THREADS, else the hardware concurrency.
int thread_count();

int cmd_energy(const RunConfig& cfg, std::ostream& out);
int cmd_fiber(const RunConfig& cfg, std::ostream& out);
int cmd_flow(const RunConfig& cfg, std::ostream& out);
int cmd_welldepth(const RunConfig& cfg, std::ostream& out);
int cmd_threshold(const RunConfig& cfg, std::ostream& out);

/// Parses `args` (program name first) and dispatches; never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace fracflow::cli
