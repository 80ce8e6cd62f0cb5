#pragma once

#include <ostream>

#include "twophase/config.hpp"

namespace twophase {

// Exit codes shared by the commands and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRunFailure = 1;
inline constexpr int kExitConfigError = 2;

// Writes <out>/estimates.csv. 0 iff every estimator converged.
int cmd_estimate(const RunConfig& config, std::ostream& log);
// Writes <out>/report.csv and <out>/report.meta.json. 1 if any estimator failed in over half the runs.
int cmd_simulate(const RunConfig& config, std::ostream& log, bool verbose = false);

// Full command line: flags override the config file. Errors go to log.
int run_cli(int argc, const char* const* argv, std::ostream& log);

}  // namespace twophase
