#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mathqac::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_data_error = 1;
inline constexpr int exit_usage_error = 2;

/// Entry point for the `mathqac` tool; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mathqac::cli
