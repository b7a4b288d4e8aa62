#pragma once

// phasedoa command line: simulate | estimate | sweep.
// Exit codes: 0 ok, 1 runtime or I/O failure, 2 usage error.

#include <iosfwd>
#include <string>
#include <vector>

namespace phasedoa::cli {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Environment variable that replaces the default sweep worker count.
constexpr const char* kWorkersEnv = "PHASEDOA_WORKERS";

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace phasedoa::cli
