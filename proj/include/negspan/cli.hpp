#ifndef NEGSPAN_CLI_HPP
#define NEGSPAN_CLI_HPP

#include <string>
#include <vector>

namespace negspan::cli {

// Runs one command (`args` excludes the program name). Exit codes:
// 0 success, 1 usage/configuration error, 2 data error, 3 numeric failure.
int run(std::vector<std::string> args);

}  // namespace negspan::cli

#endif  // NEGSPAN_CLI_HPP
