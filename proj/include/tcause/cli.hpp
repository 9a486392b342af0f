#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "tcause/error.hpp"

namespace tcause {

// 0 success, 1 unexpected failure, 2 ConfigInvalid (also bad command
// lines), 10 + ordinal for every other error code.
int exit_code(ErrorCode code);

// args excludes the program name. Summaries go to out; usage text and the
// "error: code=<Name> exit=<n> message=<text>" line go to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tcause
