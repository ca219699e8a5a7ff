#pragma once

#include <stdexcept>
#include <string>

namespace rankval {

// Data-shaped failures (bad input files, invariant violations). CLI maps
// these to exit code 3.
class DataError : public std::runtime_error {
public:
    DataError(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

// Numeric failures (non-convergence, lost brackets). CLI exit code 4.
class NumericError : public std::runtime_error {
public:
    NumericError(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

// Bad flag combinations and misuse of the API. CLI exit code 2.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& message) : std::runtime_error(message) {}
};

}  // namespace rankval
