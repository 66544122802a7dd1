#ifndef DSDST_CLI_H_
#define DSDST_CLI_H_

#include <ostream>
#include <string>
#include <vector>

#include "dsdst/error.h"

namespace dsdst::cli {

// Process exit code for an error category. Success is 0, uncategorized
// failures 1, command-line misuse 2.
int exit_code(ErrorKind kind);

// Runs the dual_dst command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dsdst::cli

#endif  // DSDST_CLI_H_
