#ifndef VEMADAPT_TOOLS_CLI_HPP
#define VEMADAPT_TOOLS_CLI_HPP

#include <string>
#include <vector>

namespace vemadapt {

inline constexpr int kExitConverged = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCapReached = 2;

/// Runs one command line (program name excluded) and returns the exit code.
int run_cli(const std::vector<std::string>& args);

}  // namespace vemadapt

#endif  // VEMADAPT_TOOLS_CLI_HPP
