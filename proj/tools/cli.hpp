#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ralstm::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,    // bad flags, invalid configuration, run directory busy
  kExitData = 2,     // unreadable or malformed data, checkpoints, DAs
  kExitNumeric = 3,  // divergence, failed gradient check
};

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ralstm::cli
