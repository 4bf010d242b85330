#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace kfnet::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kIo = 3,
  kDiverged = 4,
  kSelftestFailed = 5,
};

/// Runs `kfnet <args...>`; args excludes the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace kfnet::cli
