#pragma once

#include <iostream>
#include <ostream>
#include <string>
#include <vector>

namespace imrnn::cli {

/// Exit statuses of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 1;
inline constexpr int kExitInternalError = 2;

/// Entry point of the `imrnn` tool. Subcommands: mine, train, retrieve, eval,
/// explain, bench, inspect.
int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);
int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace imrnn::cli
