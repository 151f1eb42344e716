#pragma once

#include <string>
#include <vector>

namespace scengen::cli {

/// Runs one subcommand (synth, train, forecast, copula, eval).
/// Returns the process exit code: 0 success, 1 usage/config error,
/// 2 data error, 3 numerical failure.
int run(const std::vector<std::string>& args);

}  // namespace scengen::cli
