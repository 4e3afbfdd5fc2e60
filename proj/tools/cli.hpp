#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ltprune::cli {

// Exit codes: 0 success, 2 invalid input, 3 infeasible request, 1 anything else.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitInfeasible = 3;

int run(int argc, char** argv);

// args excludes the program name. stdout receives only artifact paths.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ltprune::cli
