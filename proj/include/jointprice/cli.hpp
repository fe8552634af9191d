#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace jointprice::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitComputation = 2;

/**
 * Runs one command line (without the program name), writing result files
 * under --out and messages to `out` / `err`.
 *
 * Returns 0 on success, 1 on invalid input or configuration and 2 when a
 * computation fails (non-convergence, degenerate data).
 */
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace jointprice::cli
