#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vcrank::cli {

/// Exit codes: 0 success, 1 usage or validation error, 2 I/O error.
enum ExitCode : int { kOk = 0, kInvalid = 1, kIo = 2 };

/// Runs one `vcrank` invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv);

}  // namespace vcrank::cli
