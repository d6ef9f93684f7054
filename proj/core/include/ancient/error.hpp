#pragma once

#include <stdexcept>
#include <string>

namespace ancient {

// Categories double as CLI exit codes (see tools/cli.cpp).
enum class ErrorCategory : int {
    Config = 2,
    Precondition = 3,
    Numerical = 4,
    Invariant = 5,
    Io = 6,
};

const char* category_name(ErrorCategory c) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& what) { throw Error(c, what); }

inline void require(bool ok, const std::string& what) {
    if (!ok) fail(ErrorCategory::Precondition, what);
}

} // namespace ancient
