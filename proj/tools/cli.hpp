#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ancient::cli {

/// Runs one subcommand. `args` excludes the program name. Returns 0 when every
/// asserted check passes, otherwise the ErrorCategory value of the first
/// failure (parse and config problems are 2).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Fixed timestamp for reproducible test runs; when unset, the current UTC time.
void set_timestamp_override(const std::string& ts);

} // namespace ancient::cli
