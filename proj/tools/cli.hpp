#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sbgnn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumeric = 3;

inline constexpr const char* kVersion = "1.0.0";

/// Runs one command line (args exclude the program name). Diagnostics go to
/// `err`, short progress lines to `out`. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sbgnn::cli
