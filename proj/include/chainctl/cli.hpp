#pragma once

#include <string>
#include <vector>

namespace chainctl::cli {

/// Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 non-convergence
/// (outputs still written).
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitNotConverged = 4;

/// Runs one subcommand (simulate, control, extend, sweep, kalman, bounds,
/// reproduce-experiment) and returns the process exit code. The output root
/// honors the CHAINCTL_OUT_ROOT environment variable.
int dispatch(const std::vector<std::string>& args);

}  // namespace chainctl::cli
