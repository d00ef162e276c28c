#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qps::cli {

/// Exit codes: 0 success, 1 I/O or parse failure, 2 validation or domain
/// failure.
inline constexpr int kOk = 0;
inline constexpr int kIoError = 1;
inline constexpr int kValidationError = 2;

/// Runs the command line; messages go to `out` and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qps::cli
