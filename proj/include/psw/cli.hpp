#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace psw::cli {

// Runs one subcommand (design | trim | estimate | simulate). Returns the
// process exit code: 0 ok, 2 config error, 3 data error, 4 fit failure.
// Errors print a single machine-parsable line on err.
int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
        std::ostream& err = std::cerr);

int run(int argc, const char* const* argv, std::ostream& out = std::cout,
        std::ostream& err = std::cerr);

}  // namespace psw::cli
