#ifndef STABLE_BICYCLE_TOOLS_CLI_HPP
#define STABLE_BICYCLE_TOOLS_CLI_HPP

#include <ostream>

namespace stable_bicycle::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 1;
inline constexpr int kStabilityViolation = 2;
inline constexpr int kPartialResults = 3;

/// Entry point shared by the binary and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stable_bicycle::cli

#endif  // STABLE_BICYCLE_TOOLS_CLI_HPP
