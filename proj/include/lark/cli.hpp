#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "lark/error.hpp"

namespace lark {

// 1 for input and configuration problems, 2 for runtime and backend failures.
int exit_code(ErrorKind kind);

/// Runs the `lark` command line. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace lark
