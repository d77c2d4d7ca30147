// tools/cli.h
//
// Subcommand dispatcher behind the ctclm executable. Lives in a library so
// tests can drive it in-process.

#ifndef CTCLM_TOOLS_CLI_H_
#define CTCLM_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace ctclm {

inline constexpr const char *kVersion = "1.0.0";

// `args` excludes the program name. Returns the process exit code:
// 0 success, 1 runtime failure, 2 usage or input error.
int RunCli(const std::vector<std::string> &args, std::ostream &out,
           std::ostream &err);

}  // namespace ctclm

#endif  // CTCLM_TOOLS_CLI_H_
