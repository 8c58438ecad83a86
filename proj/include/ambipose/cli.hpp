#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "ambipose/config.hpp"

namespace ambipose {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitSolver = 3,
  kExitIo = 4,
};

/// Builds the run configuration from command-line arguments (without the
/// program name). Flags override the --config file, which overrides
/// defaults. Throws ConfigError or IoError.
RunConfig resolve_config(const std::vector<std::string>& args);

/// Full command-line entry point. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ambipose
