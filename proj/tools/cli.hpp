#pragma once

#include <ostream>

namespace roml {

/// Entry point of the command line tool; returns the process exit code.
/// 0 success, 1 failed check or runtime error, 2 usage or config error, 3 refused overwrite.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace roml
